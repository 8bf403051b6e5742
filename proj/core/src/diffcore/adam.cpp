#include "xirl/diffcore/adam.hpp"

#include <cmath>

#include "xirl/common/errors.hpp"

namespace xirl::diff {

AdamState make_adam(const AdamConfig& config, std::span<const Tensor* const> params) {
  AdamState s;
  s.config = config;
  for (const Tensor* p : params) {
    s.m.emplace_back(p->shape(), 0.0);
    s.v.emplace_back(p->shape(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " grads, " + std::to_string(state.m.size()) +
                         " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape() || params[i]->shape() != state.m[i].shape()) {
      throw DimensionError("adam_step: shape mismatch for tensor " + std::to_string(i) + ": param " +
                           shape_string(params[i]->shape()) + ", grad " + shape_string(grads[i].shape()));
    }
    grads[i].require_finite("adam_step gradient " + std::to_string(i));
  }

  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  const double step_size = c.learning_rate / correction1;
  const double sqrt_c2 = std::sqrt(correction2);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    auto g = grads[i].values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] + c.weight_decay * p[k];
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
      p[k] -= step_size * m[k] / (std::sqrt(v[k]) / sqrt_c2 + c.epsilon);
    }
  }
}

}  // namespace xirl::diff
