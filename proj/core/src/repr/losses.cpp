#include "xirl/repr/losses.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "xirl/common/errors.hpp"

namespace xirl::repr {
namespace {

using diff::Matrix;
using diff::Var;

constexpr double kMasked = -1e30;

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

Matrix column(const std::vector<double>& v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

}  // namespace

std::vector<double> normalized_times(int length) {
  std::vector<double> t(static_cast<std::size_t>(std::max(length, 0)));
  for (int k = 0; k < length; ++k) t[static_cast<std::size_t>(k)] = length > 1 ? double(k) / (length - 1) : 0.0;
  return t;
}

std::vector<double> normalized_times(std::span<const int> indices, int length) {
  std::vector<double> t;
  t.reserve(indices.size());
  for (int k : indices) t.push_back(length > 1 ? double(k) / (length - 1) : 0.0);
  return t;
}

SoftNeighbour soft_nn(const Eigen::Ref<const Eigen::VectorXd>& q, const Eigen::Ref<const Matrix>& v,
                      double temperature) {
  if (v.rows() == 0) throw ContractError("soft_nn: empty sequence");
  if (v.cols() != q.size()) throw DimensionError("soft_nn: query and sequence dimensions differ");
  Eigen::VectorXd logits(v.rows());
  for (Eigen::Index k = 0; k < v.rows(); ++k) logits(k) = -(v.row(k).transpose() - q).squaredNorm() / temperature;
  SoftNeighbour out;
  out.alpha = softmax(logits);
  out.point = v.transpose() * out.alpha;
  return out;
}

CycleBack cycle_back(const Eigen::Ref<const Eigen::VectorXd>& point, const Eigen::Ref<const Matrix>& u, int t,
                     double temperature) {
  if (t < 0 || t >= u.rows()) throw ContractError("cycle_back: frame index out of range");
  const SoftNeighbour back = soft_nn(point, u, temperature);
  const auto times = normalized_times(static_cast<int>(u.rows()));
  CycleBack out;
  out.beta = back.alpha;
  for (Eigen::Index k = 0; k < u.rows(); ++k) out.mu += out.beta(k) * times[static_cast<std::size_t>(k)];
  const double err = out.mu - times[static_cast<std::size_t>(t)];
  out.loss = err * err;
  return out;
}

Var tcc_loss(diff::Tape& tape, std::span<const SequenceVar> batch, double temperature) {
  if (batch.size() < 2) throw ContractError("tcc_loss: needs at least two sequences");
  if (!(temperature > 0.0)) throw ContractError("tcc_loss: temperature must be positive");
  std::vector<Var> terms;
  double frames = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& u = batch[i];
    if (u.times.size() != tape.rows(u.embeddings)) throw DimensionError("tcc_loss: times do not match frames");
    const Var t = tape.constant(column(u.times));
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (i == j) continue;
      const Var v = batch[j].embeddings;
      const Var alpha = tape.softmax_rows(tape.scale(tape.pairwise_sq_dist(u.embeddings, v), -1.0 / temperature));
      const Var nearest = tape.matmul(alpha, v);
      const Var beta =
          tape.softmax_rows(tape.scale(tape.pairwise_sq_dist(nearest, u.embeddings), -1.0 / temperature));
      const Var mu = tape.matmul(beta, t);
      terms.push_back(tape.sum(tape.square(tape.sub(mu, t))));
      frames += static_cast<double>(u.times.size());
    }
  }
  Var total = terms.front();
  for (std::size_t k = 1; k < terms.size(); ++k) total = tape.add(total, terms[k]);
  return tape.scale(total, 1.0 / frames);
}

Var tcn_loss(diff::Tape& tape, Var chunk, Var log_temperature, const TcnWindows& windows) {
  const auto n = static_cast<Eigen::Index>(tape.rows(chunk));
  if (windows.positive < 1 || windows.negative < windows.positive) throw ContractError("tcn_loss: bad windows");
  const Var inv_temp = tape.exp(tape.neg(log_temperature));
  const Var logits = tape.neg(tape.scale_by(inv_temp, tape.pairwise_sq_dist(chunk, chunk)));
  std::vector<Var> terms;
  double pairs = 0.0;
  for (int delta = -windows.positive; delta <= windows.positive; ++delta) {
    if (delta == 0) continue;
    Matrix mask = Matrix::Zero(n, n);
    Matrix pick = Matrix::Zero(n, n);
    bool any = false;
    for (Eigen::Index a = 0; a < n; ++a) {
      const Eigen::Index p = a + delta;
      bool has_negative = false;
      for (Eigen::Index k = 0; k < n; ++k) has_negative = has_negative || std::abs(k - a) > windows.negative;
      if (p < 0 || p >= n || !has_negative) continue;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k != p && std::abs(k - a) <= windows.negative) mask(a, k) = kMasked;
      }
      pick(a, p) = 1.0;
      pairs += 1.0;
      any = true;
    }
    if (!any) continue;
    const Var ls = tape.log_softmax_rows(tape.add(logits, tape.constant(std::move(mask))));
    terms.push_back(tape.sum(tape.mul(ls, tape.constant(std::move(pick)))));
  }
  if (terms.empty()) throw ContractError("tcn_loss: chunk of " + std::to_string(n) + " frames has no negatives");
  Var total = terms.front();
  for (std::size_t k = 1; k < terms.size(); ++k) total = tape.add(total, terms[k]);
  return tape.scale(total, -1.0 / pairs);
}

Var tcn_batch_loss(diff::Tape& tape, std::span<const Var> chunks, Var log_temperature, const TcnWindows& windows) {
  if (chunks.empty()) throw ContractError("tcn_batch_loss: empty batch");
  Var total = tcn_loss(tape, chunks[0], log_temperature, windows);
  for (std::size_t k = 1; k < chunks.size(); ++k) total = tape.add(total, tcn_loss(tape, chunks[k], log_temperature, windows));
  return tape.scale(total, 1.0 / static_cast<double>(chunks.size()));
}

std::vector<int> lifs_pairing(int from_length, int to_length) {
  std::vector<int> from(static_cast<std::size_t>(from_length));
  std::vector<int> to(static_cast<std::size_t>(to_length));
  for (int k = 0; k < from_length; ++k) from[static_cast<std::size_t>(k)] = k;
  for (int k = 0; k < to_length; ++k) to[static_cast<std::size_t>(k)] = k;
  const auto rows = lifs_pairing(from, from_length, to, to_length);
  return {rows.begin(), rows.end()};
}

std::vector<std::size_t> lifs_pairing(std::span<const int> from_indices, int from_length,
                                      std::span<const int> to_indices, int to_length) {
  if (to_indices.empty()) throw ContractError("lifs_pairing: empty target");
  if (from_length < 1 || to_length < 1) throw ContractError("lifs_pairing: lengths must be positive");
  std::vector<std::size_t> out;
  out.reserve(from_indices.size());
  for (int f : from_indices) {
    // |f / Lf - t / Lt| compared exactly as |f * Lt - t * Lf|.
    std::size_t best = 0;
    long long best_gap = std::numeric_limits<long long>::max();
    for (std::size_t r = 0; r < to_indices.size(); ++r) {
      const long long gap = std::llabs(static_cast<long long>(f) * to_length -
                                       static_cast<long long>(to_indices[r]) * from_length);
      if (gap < best_gap) {
        best_gap = gap;
        best = r;
      }
    }
    out.push_back(best);
  }
  return out;
}

Var lifs_loss(diff::Tape& tape, std::span<const Var> embeddings, std::span<const LifsPair> pairs,
              std::span<const Var> reconstructions, std::span<const Var> inputs, double lambda_rec) {
  if (pairs.empty()) throw ContractError("lifs_loss: no pairs");
  if (reconstructions.size() != inputs.size()) throw ContractError("lifs_loss: reconstructions and inputs differ");
  std::vector<Var> terms;
  double matched = 0.0;
  for (const auto& p : pairs) {
    const Var a = embeddings[p.from];
    if (p.rows.size() != tape.rows(a)) throw DimensionError("lifs_loss: pairing table does not cover every frame");
    const Var b = tape.gather_rows(embeddings[p.to], p.rows);
    terms.push_back(tape.sum(tape.square(tape.sub(a, b))));
    matched += static_cast<double>(p.rows.size());
  }
  Var align = terms.front();
  for (std::size_t k = 1; k < terms.size(); ++k) align = tape.add(align, terms[k]);
  align = tape.scale(align, 1.0 / matched);
  if (reconstructions.empty()) return align;

  std::vector<Var> rec_terms;
  double elements = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    rec_terms.push_back(tape.sum(tape.square(tape.sub(reconstructions[k], inputs[k]))));
    elements += static_cast<double>(tape.rows(inputs[k]) * tape.cols(inputs[k]));
  }
  Var rec = rec_terms.front();
  for (std::size_t k = 1; k < rec_terms.size(); ++k) rec = tape.add(rec, rec_terms[k]);
  return tape.add(align, tape.scale(rec, lambda_rec / elements));
}

Var goal_classifier_loss(diff::Tape& tape, Var logits, std::span<const int> labels) {
  const auto n = static_cast<Eigen::Index>(tape.rows(logits));
  if (tape.cols(logits) != 1 || static_cast<std::size_t>(n) != labels.size()) {
    throw DimensionError("goal_classifier_loss: logits must be [n, 1] with one label per row");
  }
  double positives = 0.0;
  for (int l : labels) positives += l != 0 ? 1.0 : 0.0;
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) throw ContractError("goal_classifier_loss: both classes required");
  Matrix sign(n, 1);
  Matrix weight(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool pos = labels[static_cast<std::size_t>(i)] != 0;
    sign(i, 0) = pos ? -1.0 : 1.0;  // -log sigmoid(z) = softplus(-z)
    weight(i, 0) = pos ? 0.5 / positives : 0.5 / negatives;
  }
  const Var per_row = tape.softplus(tape.mul(logits, tape.constant(std::move(sign))));
  return tape.sum(tape.mul(per_row, tape.constant(std::move(weight))));
}

}  // namespace xirl::repr
