#pragma once

#include <span>
#include <vector>

#include "xirl/diffcore/tensor.hpp"
#include "xirl/env/embodiment.hpp"

namespace xirl::repr {

/// Kendall's tau-b between two equally long series; 0 when either series is
/// constant.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation using average ranks for ties; 0 when either
/// series is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Index of the nearest row of `v` (squared L2) for each row of `u`; ties go
/// to the lower index.
std::vector<int> nearest_neighbours(const Eigen::Ref<const diff::Matrix>& u, const Eigen::Ref<const diff::Matrix>& v);

/// Tau-b between frame indices of `u` and the indices of their nearest
/// neighbours in `v`. Throws ContractError when either is shorter than 2.
double kendalls_tau(const Eigen::Ref<const diff::Matrix>& u, const Eigen::Ref<const diff::Matrix>& v);

struct PairTau {
  std::size_t a = 0;
  std::size_t b = 0;
  env::Embodiment embodiment_a = env::Embodiment::kLongstick;
  env::Embodiment embodiment_b = env::Embodiment::kLongstick;
  double tau = 0.0;
};

struct AlignmentSummary {
  std::vector<PairTau> pairs;
  double mean = 0.0;
  double mean_same = 0.0;   // pairs of the same embodiment (NaN when none)
  double mean_cross = 0.0;  // pairs across embodiments (NaN when none)
};

/// Tau over all ordered pairs a != b of the given sequences, or over at most
/// `max_pairs` of them taken in a fixed stride when that is smaller.
AlignmentSummary alignment_summary(std::span<const diff::Matrix> sequences, std::span<const env::Embodiment> labels,
                                   std::size_t max_pairs = 0);

}  // namespace xirl::repr
