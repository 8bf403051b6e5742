#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "xirl/diffcore/tape.hpp"
#include "xirl/diffcore/tensor.hpp"

namespace xirl::diff {

enum class Activation : std::uint8_t { kIdentity, kRelu, kTanh, kSigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// One affine layer followed by an activation. Weight is [in, out].
struct DenseLayer {
  Tensor weight;
  Tensor bias;
  Activation activation = Activation::kIdentity;

  [[nodiscard]] std::size_t in_features() const { return weight.shape()[0]; }
  [[nodiscard]] std::size_t out_features() const { return weight.shape()[1]; }
  bool operator==(const DenseLayer&) const = default;
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  [[nodiscard]] std::size_t in_features() const;
  [[nodiscard]] std::size_t out_features() const;
  /// Throws DimensionError unless consecutive layer widths chain.
  void validate() const;
  /// Every weight and bias tensor, in layer order (weight, bias, weight, ...).
  [[nodiscard]] std::vector<Tensor*> tensors();
  [[nodiscard]] std::vector<const Tensor*> tensors() const;
  bool operator==(const MlpParams&) const = default;
};

enum class InitScheme : std::uint8_t {
  /// Uniform with fan-in scaling, bound sqrt(6 / fan_in) for ReLU layers and
  /// sqrt(3 / fan_in) otherwise. Biases zero.
  kFanInUniform,
  /// Orthogonal weights (gain 1), zero biases.
  kOrthogonal,
};

/// Builds an MLP with `widths.size() - 1` layers; every layer but the last
/// uses `hidden`, the last uses `output`.
MlpParams make_mlp(const std::vector<std::size_t>& widths, Activation hidden, Activation output,
                   InitScheme init, std::mt19937_64& rng);

/// Tape-free forward pass; safe for concurrent use on shared parameters.
/// `input` must have last dimension equal to the first layer's input width.
Tensor forward_mlp(const MlpParams& params, const Tensor& input);
Matrix forward_mlp(const MlpParams& params, const Eigen::Ref<const Matrix>& input);

/// Tape handles for every parameter tensor of an MLP, in `MlpParams::tensors` order.
struct MlpVars {
  std::vector<Var> vars;
};

/// Registers the MLP's tensors as differentiable parameters.
MlpVars bind_parameters(Tape& tape, const MlpParams& params);
/// Registers the MLP's tensors as constants (gradient flows to inputs only).
MlpVars bind_constants(Tape& tape, const MlpParams& params);

Var forward_mlp(Tape& tape, const MlpParams& params, const MlpVars& vars, Var input);

/// Gradient tensors for every bound parameter, shaped like the parameters.
std::vector<Tensor> collect_grads(const Tape& tape, const MlpParams& params, const MlpVars& vars);

/// Rounds every parameter to the nearest 32-bit float (checkpoint precision).
void round_to_f32(MlpParams& params);

}  // namespace xirl::diff
