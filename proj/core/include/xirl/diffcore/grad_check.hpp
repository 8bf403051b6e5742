#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "xirl/diffcore/tape.hpp"
#include "xirl/diffcore/tensor.hpp"

namespace xirl::diff {

/// Builds a scalar loss on `tape` from differentiable handles for `params`.
using LossFn = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Checks this many randomly chosen coordinates, or all when there are fewer.
  std::size_t coordinates = 64;
  /// Every parameter is shifted by U(-probe_offset, probe_offset) before the
  /// check so that probes do not sit exactly on activation kinks.
  double probe_offset = 0.0;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double relative_floor = 1e-6;
  /// Central differences at epsilon and epsilon/2 that disagree by more than
  /// this (relative to max(1, |d|)) mark a coordinate as straddling a kink;
  /// such coordinates are excluded.
  double kink_tolerance = 1e-5;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;
};

/// Compares reverse-mode gradients of `loss` with central finite differences.
/// Throws NumericError if the loss is non-finite at any probe.
GradCheckResult grad_check(const LossFn& loss, std::vector<Tensor> params, const GradCheckOptions& options = {});

}  // namespace xirl::diff
