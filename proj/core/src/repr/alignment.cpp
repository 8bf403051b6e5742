#include "xirl/repr/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "xirl/common/errors.hpp"

namespace xirl::repr {
namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("kendall_tau_b: series lengths differ");
  long long concordant = 0;
  long long discordant = 0;
  long long ties_x = 0;
  long long ties_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ++ties_x;
      } else if (dy == 0.0) {
        ++ties_y;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n1 = static_cast<double>(concordant + discordant + ties_x);
  const double n2 = static_cast<double>(concordant + discordant + ties_y);
  if (n1 == 0.0 || n2 == 0.0) return 0.0;
  return static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("spearman: series lengths differ");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<int> nearest_neighbours(const Eigen::Ref<const diff::Matrix>& u, const Eigen::Ref<const diff::Matrix>& v) {
  if (u.cols() != v.cols()) throw DimensionError("nearest_neighbours: embedding dimensions differ");
  if (v.rows() == 0) throw ContractError("nearest_neighbours: empty target");
  std::vector<int> out(static_cast<std::size_t>(u.rows()));
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
      const double d = (u.row(i) - v.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(j);
      }
    }
    out[static_cast<std::size_t>(i)] = arg;
  }
  return out;
}

double kendalls_tau(const Eigen::Ref<const diff::Matrix>& u, const Eigen::Ref<const diff::Matrix>& v) {
  if (u.rows() < 2 || v.rows() < 2) throw ContractError("kendalls_tau: sequences need at least two frames");
  const auto nn = nearest_neighbours(u, v);
  std::vector<double> src(nn.size());
  std::vector<double> dst(nn.size());
  for (std::size_t i = 0; i < nn.size(); ++i) {
    src[i] = static_cast<double>(i);
    dst[i] = nn[i];
  }
  return kendall_tau_b(src, dst);
}

AlignmentSummary alignment_summary(std::span<const diff::Matrix> sequences, std::span<const env::Embodiment> labels,
                                   std::size_t max_pairs) {
  if (sequences.size() != labels.size()) throw DimensionError("alignment_summary: one label per sequence");
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t a = 0; a < sequences.size(); ++a) {
    for (std::size_t b = 0; b < sequences.size(); ++b) {
      if (a != b) all.emplace_back(a, b);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  if (max_pairs == 0 || all.size() <= max_pairs) {
    chosen = all;
  } else {
    const double stride = static_cast<double>(all.size()) / static_cast<double>(max_pairs);
    for (std::size_t k = 0; k < max_pairs; ++k) chosen.push_back(all[static_cast<std::size_t>(k * stride)]);
  }
  AlignmentSummary s;
  double same = 0.0;
  double cross = 0.0;
  std::size_t n_same = 0;
  std::size_t n_cross = 0;
  for (auto [a, b] : chosen) {
    PairTau p{a, b, labels[a], labels[b], kendalls_tau(sequences[a], sequences[b])};
    s.mean += p.tau;
    if (p.embodiment_a == p.embodiment_b) {
      same += p.tau;
      ++n_same;
    } else {
      cross += p.tau;
      ++n_cross;
    }
    s.pairs.push_back(p);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.mean = chosen.empty() ? nan : s.mean / static_cast<double>(chosen.size());
  s.mean_same = n_same ? same / static_cast<double>(n_same) : nan;
  s.mean_cross = n_cross ? cross / static_cast<double>(n_cross) : nan;
  return s;
}

}  // namespace xirl::repr
