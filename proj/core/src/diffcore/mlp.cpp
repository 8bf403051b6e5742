#include "xirl/diffcore/mlp.hpp"

#include <cmath>

#include <Eigen/QR>

#include "xirl/common/errors.hpp"

namespace xirl::diff {
namespace {

Matrix apply_activation(Matrix x, Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return x;
    case Activation::kRelu:
      return x.cwiseMax(0.0);
    case Activation::kTanh:
      return x.array().tanh();
    case Activation::kSigmoid:
      return (1.0 / (1.0 + (-x.array()).exp())).matrix();
  }
  return x;
}

Var apply_activation(Tape& tape, Var x, Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return x;
    case Activation::kRelu:
      return tape.relu(x);
    case Activation::kTanh:
      return tape.tanh(x);
    case Activation::kSigmoid:
      return tape.sigmoid(x);
  }
  return x;
}

Tensor orthogonal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t big = std::max(rows, cols);
  const std::size_t small = std::min(rows, cols);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(big), static_cast<Eigen::Index>(small));
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  // Sign correction makes the distribution uniform (Haar).
  const Eigen::MatrixXd r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  Matrix w = rows >= cols ? Matrix(q) : Matrix(q.transpose());
  return Tensor::from_matrix(w);
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw FormatError("unknown activation '" + name + "'");
}

std::size_t MlpParams::in_features() const {
  if (layers.empty()) throw ContractError("mlp has no layers");
  return layers.front().in_features();
}

std::size_t MlpParams::out_features() const {
  if (layers.empty()) throw ContractError("mlp has no layers");
  return layers.back().out_features();
}

void MlpParams::validate() const {
  if (layers.empty()) throw DimensionError("mlp has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.shape()[0] != l.weight.shape()[1]) {
      throw DimensionError("mlp layer " + std::to_string(i) + " has inconsistent weight/bias shapes");
    }
    if (i > 0 && layers[i - 1].out_features() != l.in_features()) {
      throw DimensionError("mlp layer " + std::to_string(i) + " input width " +
                           std::to_string(l.in_features()) + " does not chain with previous output " +
                           std::to_string(layers[i - 1].out_features()));
    }
  }
}

std::vector<Tensor*> MlpParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> MlpParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

MlpParams make_mlp(const std::vector<std::size_t>& widths, Activation hidden, Activation output,
                   InitScheme init, std::mt19937_64& rng) {
  if (widths.size() < 2) throw ContractError("make_mlp: need at least input and output widths");
  MlpParams p;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    DenseLayer layer;
    layer.activation = last ? output : hidden;
    const std::size_t in = widths[i];
    const std::size_t out = widths[i + 1];
    if (init == InitScheme::kOrthogonal) {
      layer.weight = orthogonal(in, out, rng);
    } else {
      const double gain = layer.activation == Activation::kRelu ? 6.0 : 3.0;
      const double bound = std::sqrt(gain / static_cast<double>(in));
      std::uniform_real_distribution<double> u(-bound, bound);
      layer.weight = Tensor({in, out});
      for (auto& w : layer.weight.values()) w = u(rng);
    }
    layer.bias = Tensor({out}, 0.0);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Matrix forward_mlp(const MlpParams& params, const Eigen::Ref<const Matrix>& input) {
  if (static_cast<std::size_t>(input.cols()) != params.in_features()) {
    throw DimensionError("forward_mlp: input width " + std::to_string(input.cols()) + " but network expects " +
                         std::to_string(params.in_features()));
  }
  Matrix x = input;
  for (const auto& l : params.layers) {
    Matrix y(x.rows(), static_cast<Eigen::Index>(l.out_features()));
    y.noalias() = x * l.weight.matrix();
    y.rowwise() += l.bias.matrix().row(0);
    x = apply_activation(std::move(y), l.activation);
  }
  return x;
}

Tensor forward_mlp(const MlpParams& params, const Tensor& input) {
  if (input.rank() == 0) throw DimensionError("forward_mlp: empty input");
  Matrix out = forward_mlp(params, input.matrix());
  std::vector<std::size_t> shape = input.shape();
  shape.back() = params.out_features();
  return Tensor(shape, std::vector<double>(out.data(), out.data() + out.size()));
}

MlpVars bind_parameters(Tape& tape, const MlpParams& params) {
  MlpVars v;
  for (const Tensor* t : params.tensors()) v.vars.push_back(tape.parameter(*t));
  return v;
}

MlpVars bind_constants(Tape& tape, const MlpParams& params) {
  MlpVars v;
  for (const Tensor* t : params.tensors()) v.vars.push_back(tape.constant(*t));
  return v;
}

Var forward_mlp(Tape& tape, const MlpParams& params, const MlpVars& vars, Var input) {
  if (vars.vars.size() != params.layers.size() * 2) throw ContractError("forward_mlp: bindings do not match");
  if (tape.cols(input) != params.in_features()) {
    throw DimensionError("forward_mlp: input width " + std::to_string(tape.cols(input)) +
                         " but network expects " + std::to_string(params.in_features()));
  }
  Var x = input;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    x = tape.add_row(tape.matmul(x, vars.vars[2 * i]), vars.vars[2 * i + 1]);
    x = apply_activation(tape, x, params.layers[i].activation);
  }
  return x;
}

std::vector<Tensor> collect_grads(const Tape& tape, const MlpParams& params, const MlpVars& vars) {
  std::vector<Tensor> grads;
  const auto ts = params.tensors();
  grads.reserve(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) grads.push_back(tape.grad(vars.vars[i], ts[i]->shape()));
  return grads;
}

void round_to_f32(MlpParams& params) {
  for (Tensor* t : params.tensors()) {
    for (auto& v : t->values()) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace xirl::diff
