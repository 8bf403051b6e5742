#pragma once

#include <span>
#include <utility>
#include <vector>

#include "xirl/diffcore/tape.hpp"

namespace xirl::repr {

/// One embedded video inside a loss: rows are frames, `times` their
/// normalised time stamps (frame index / (video length - 1), 0 for a single
/// frame).
struct SequenceVar {
  diff::Var embeddings;
  std::vector<double> times;
};

/// Normalised time stamps k / (L - 1) for k = 0..L-1.
std::vector<double> normalized_times(int length);
/// Time stamps of sampled `indices` out of a video of `length` frames.
std::vector<double> normalized_times(std::span<const int> indices, int length);

// --- evaluation-only forms (no tape) ---------------------------------------

struct SoftNeighbour {
  Eigen::VectorXd alpha;
  Eigen::VectorXd point;
};
/// alpha = softmax(-||q - V_k||^2 / temperature), point = sum_k alpha_k V_k.
SoftNeighbour soft_nn(const Eigen::Ref<const Eigen::VectorXd>& q, const Eigen::Ref<const diff::Matrix>& v,
                      double temperature = 1.0);

struct CycleBack {
  Eigen::VectorXd beta;
  double mu = 0.0;
  double loss = 0.0;
};
/// Cycles `point` back onto `u` and regresses the expected time onto frame t.
CycleBack cycle_back(const Eigen::Ref<const Eigen::VectorXd>& point, const Eigen::Ref<const diff::Matrix>& u, int t,
                     double temperature = 1.0);

// --- differentiable losses -------------------------------------------------

/// Mean over ordered pairs (i, j), i != j, and frames t of sequence i of the
/// squared error between t's time and the cycle-back expected time.
/// Throws ContractError for fewer than two sequences.
diff::Var tcc_loss(diff::Tape& tape, std::span<const SequenceVar> batch, double temperature = 1.0);

struct TcnWindows {
  int positive = 1;  // |i - j| <= positive, i != j
  int negative = 4;  // |i - j| > negative
};

/// Softmax-contrastive loss over one contiguous chunk: each (anchor,
/// positive) pair competes against the anchor's negatives. Logits are
/// -squared distance * exp(-log_temperature). Frames between the windows are
/// ignored. Throws ContractError when no anchor has both a positive and a
/// negative.
diff::Var tcn_loss(diff::Tape& tape, diff::Var chunk, diff::Var log_temperature, const TcnWindows& windows = {});
/// Mean of tcn_loss over several chunks.
diff::Var tcn_batch_loss(diff::Tape& tape, std::span<const diff::Var> chunks, diff::Var log_temperature,
                         const TcnWindows& windows = {});

/// For every frame of a video of length `from_length`, the frame of a video of
/// length `to_length` whose t / L is nearest; ties go to the lower index.
std::vector<int> lifs_pairing(int from_length, int to_length);
/// Same rule restricted to sampled frames: entry r is the position in
/// `to_indices` matched to `from_indices[r]`.
std::vector<std::size_t> lifs_pairing(std::span<const int> from_indices, int from_length,
                                      std::span<const int> to_indices, int to_length);

/// Row r of sequence `from` is matched with row rows[r] of sequence `to`.
struct LifsPair {
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<std::size_t> rows;
};

/// Mean squared distance between matched embeddings of the listed pairs, plus
/// `lambda_rec` times the mean squared reconstruction error of
/// `reconstructions` against `inputs` (skipped when both are empty).
diff::Var lifs_loss(diff::Tape& tape, std::span<const diff::Var> embeddings, std::span<const LifsPair> pairs,
                    std::span<const diff::Var> reconstructions, std::span<const diff::Var> inputs,
                    double lambda_rec = 1.0);

/// Class-balanced binary cross-entropy on logits [n, 1]: positives and
/// negatives each contribute half of the loss. Throws ContractError unless
/// both classes are present.
diff::Var goal_classifier_loss(diff::Tape& tape, diff::Var logits, std::span<const int> labels);

}  // namespace xirl::repr
