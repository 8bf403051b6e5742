#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "xirl/demo/demo.hpp"
#include "xirl/diffcore/checkpoint.hpp"
#include "xirl/repr/encoder.hpp"

namespace xirl::reward {

/// How the embedding distance enters kappa and the reward.
enum class DistanceKind { kSquared, kEuclidean };

DistanceKind parse_distance_kind(std::string_view name);
std::string_view to_string(DistanceKind kind);

/// Learned reward built on a frozen encoder. Embedding sources use
/// r = -dist(phi(s), g) / kappa; the goal classifier source uses its
/// sigmoid output instead and carries no g or kappa.
struct RewardModel {
  repr::EncoderModel encoder;
  std::optional<Eigen::VectorXd> goal;
  std::optional<double> kappa;
  DistanceKind distance = DistanceKind::kSquared;

  [[nodiscard]] bool is_classifier() const { return encoder.algorithm == repr::Algorithm::kGoalClassifier; }
  /// Reward of one rendered grid. Throws DimensionError on a size mismatch.
  [[nodiscard]] double operator()(std::span<const std::uint8_t> grid) const;
  /// Rewards for rows of precomputed embeddings.
  [[nodiscard]] Eigen::VectorXd from_embeddings(const Eigen::Ref<const diff::Matrix>& embeddings) const;
};

/// dist(e, g) under the chosen kind.
double embedding_distance(const Eigen::Ref<const Eigen::VectorXd>& e, const Eigen::Ref<const Eigen::VectorXd>& g,
                          DistanceKind kind);

/// Mean of the rows of `last_frames`. Throws ContractError when empty.
Eigen::VectorXd goal_from_embeddings(const Eigen::Ref<const diff::Matrix>& last_frames);
/// Mean distance of the rows of `first_frames` to g. Throws NumericError when
/// the result is below 1e-9.
double kappa_from_embeddings(const Eigen::Ref<const diff::Matrix>& first_frames,
                             const Eigen::Ref<const Eigen::VectorXd>& g, DistanceKind kind);

/// g over the last frames of every video.
Eigen::VectorXd compute_goal(const repr::EncoderModel& encoder, std::span<const demo::VideoView> videos);
/// kappa over the first frames of every video.
double compute_kappa(const repr::EncoderModel& encoder, std::span<const demo::VideoView> videos,
                     const Eigen::Ref<const Eigen::VectorXd>& g, DistanceKind kind);

/// Rounds the encoder to checkpoint precision, then fits g and kappa so that a
/// saved and reloaded model reproduces the same rewards.
RewardModel build_reward_model(repr::EncoderModel encoder, std::span<const demo::Demonstration> demos,
                               DistanceKind kind = DistanceKind::kSquared);

/// Learned reward for every frame of a video.
std::vector<double> reward_trace(const RewardModel& model, const demo::VideoView& video);

/// CSV frame_index,learned_reward,env_reward.
void write_trace_csv(std::ostream& out, std::span<const double> learned, const demo::VideoView& video);

/// Encoder checkpoint with g, kappa and the distance kind in its metadata.
diff::Checkpoint to_checkpoint(const RewardModel& model);
/// Throws ConfigError when an embedding-source checkpoint lacks g or kappa.
RewardModel reward_model_from_checkpoint(const diff::Checkpoint& ckpt);

}  // namespace xirl::reward
