#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "xirl/diffcore/tensor.hpp"

namespace xirl::diff {

/// Handle to a node recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

/// Reverse-mode differentiation tape over 2-D row-major matrices.
///
/// Every operation evaluates eagerly and records a backward rule. Leaves are
/// either constants (never differentiated) or differentiable leaves created
/// with `parameter`/`variable`. `backward` may be called once per tape.
///
/// A tape is single-owner; it may reference parameter storage that must
/// outlive it but never mutates that storage.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // --- leaves -------------------------------------------------------------
  Var constant(Matrix value);
  Var constant(const Tensor& value);
  Var scalar_constant(double value);
  /// Differentiable leaf backed by external storage (not copied).
  Var parameter(const Tensor& storage);
  /// Differentiable leaf that owns its value.
  Var variable(Matrix value);

  // --- linear algebra -----------------------------------------------------
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  /// x[n,m] + b[1,m], broadcast over rows.
  Var add_row(Var x, Var row);
  Var scale(Var x, double factor);
  Var add_scalar(Var x, double offset);
  /// s[1,1] * x
  Var scale_by(Var s, Var x);
  Var neg(Var x) { return scale(x, -1.0); }

  // --- elementwise --------------------------------------------------------
  Var relu(Var x);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var exp(Var x);
  Var log(Var x);
  /// log(1 + exp(x)), evaluated stably.
  Var softplus(Var x);
  Var square(Var x);
  Var minimum(Var a, Var b);

  // --- row-structured -----------------------------------------------------
  Var softmax_rows(Var x);
  Var log_softmax_rows(Var x);
  /// out[i,j] = ||a_i - b_j||^2
  Var pairwise_sq_dist(Var a, Var b);
  Var normalize_rows(Var x);
  Var row_sum(Var x);
  Var gather_rows(Var x, std::span<const std::size_t> rows);
  Var slice_cols(Var x, std::size_t first, std::size_t count);
  Var concat_cols(Var a, Var b);
  Var concat_rows(std::span<const Var> parts);

  // --- reductions ---------------------------------------------------------
  Var sum(Var x);
  Var mean(Var x);

  // --- access -------------------------------------------------------------
  [[nodiscard]] ConstMatrixMap value(Var v) const;
  [[nodiscard]] double scalar(Var v) const;
  [[nodiscard]] std::size_t rows(Var v) const;
  [[nodiscard]] std::size_t cols(Var v) const;
  [[nodiscard]] bool requires_grad(Var v) const;
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// Propagates d(loss)/d(node) back through the tape. `loss` must be 1x1
  /// and finite.
  void backward(Var loss);

  /// Gradient of the last backward pass with respect to `v` (zeros when `v`
  /// did not influence the loss).
  [[nodiscard]] Matrix grad(Var v) const;
  /// Same as grad(), reshaped to `shape`.
  [[nodiscard]] Tensor grad(Var v, const std::vector<std::size_t>& shape) const;

 private:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  struct Node {
    Matrix value;
    const double* external = nullptr;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    bool needs_grad = false;
    Matrix grad;
    Backward backward;
  };

  Var push(Matrix value, bool needs_grad, Backward backward);
  Node& node(Var v);
  const Node& node(Var v) const;
  void accumulate(Var v, const Eigen::Ref<const Matrix>& g);
  void require_same_shape(Var a, Var b, const char* op) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace xirl::diff
