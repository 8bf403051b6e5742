#include "xirl/diffcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "xirl/common/errors.hpp"

namespace xirl::diff {
namespace {

double evaluate(const LossFn& loss, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.parameter(p));
  const double value = tape.scalar(loss(tape, vars));
  if (!std::isfinite(value)) throw NumericError("grad_check: loss is not finite");
  return value;
}

}  // namespace

GradCheckResult grad_check(const LossFn& loss, std::vector<Tensor> params, const GradCheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  if (options.probe_offset > 0.0) {
    std::uniform_real_distribution<double> u(-options.probe_offset, options.probe_offset);
    for (auto& p : params) {
      for (auto& v : p.values()) v += u(rng);
    }
  }

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.parameter(p));
    const Var l = loss(tape, vars);
    if (!std::isfinite(tape.scalar(l))) throw NumericError("grad_check: loss is not finite");
    tape.backward(l);
    for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(tape.grad(vars[i], params[i].shape()));
  }

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i].size(); ++k) coords.emplace_back(i, k);
  }
  if (coords.size() > options.coordinates) {
    std::vector<std::pair<std::size_t, std::size_t>> chosen;
    std::sample(coords.begin(), coords.end(), std::back_inserter(chosen), options.coordinates, rng);
    coords = std::move(chosen);
  }

  const auto central = [&](std::size_t i, std::size_t k, double h) {
    const double saved = params[i][k];
    params[i][k] = saved + h;
    const double up = evaluate(loss, params);
    params[i][k] = saved - h;
    const double down = evaluate(loss, params);
    params[i][k] = saved;
    return (up - down) / (2.0 * h);
  };

  GradCheckResult result;
  for (const auto& [i, k] : coords) {
    const double numeric = central(i, k, options.epsilon);
    const double half = central(i, k, options.epsilon / 2.0);
    if (std::abs(numeric - half) > options.kink_tolerance * std::max(1.0, std::abs(numeric))) {
      ++result.excluded;
      continue;
    }
    const double a = analytic[i][k];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.relative_floor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
    ++result.checked;
  }
  return result;
}

}  // namespace xirl::diff
