#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xirl/diffcore/tensor.hpp"

namespace xirl::diff {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Coupled L2 penalty: weight_decay * param is added to the gradient.
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;
};

AdamState make_adam(const AdamConfig& config, std::span<const Tensor* const> params);

/// One bias-corrected Adam update, in place. Throws NumericError on
/// non-finite gradients (parameters are left untouched in that case).
void adam_step(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor> grads);

}  // namespace xirl::diff
