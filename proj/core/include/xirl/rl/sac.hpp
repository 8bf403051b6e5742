#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "xirl/diffcore/adam.hpp"
#include "xirl/diffcore/checkpoint.hpp"
#include "xirl/diffcore/mlp.hpp"
#include "xirl/diffcore/tape.hpp"
#include "xirl/rl/replay.hpp"

namespace xirl::rl {

struct SacConfig {
  int total_steps = 75000;
  double discount = 0.99;
  std::size_t replay_capacity = 1000000;
  int batch_size = 256;
  int seed_steps = 1000;
  double target_momentum = 0.005;
  int actor_update_period = 2;
  int target_update_period = 2;
  double initial_temperature = 0.1;
  bool learn_temperature = true;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  std::vector<std::size_t> hidden = {256, 256};
  double actor_lr = 1e-4;
  double critic_lr = 1e-4;
  double temperature_lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int eval_period = 5000;
  int eval_episodes = 50;
  std::uint64_t seed = 0;

  /// Throws ConfigError on non-positive sizes or unordered bounds.
  void validate() const;
};

/// Actor (mean and raw log-std per action), twin critics and their targets.
struct AgentParams {
  diff::MlpParams actor;
  diff::MlpParams critic1;
  diff::MlpParams critic2;
  diff::MlpParams target1;
  diff::MlpParams target2;
  diff::Tensor log_alpha;  // shape [1]
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  double log_std_min = -5.0;
  double log_std_max = 2.0;

  [[nodiscard]] double temperature() const;
  bool operator==(const AgentParams&) const = default;
};

struct SacAgent {
  SacConfig config;
  AgentParams params;
  diff::AdamState actor_opt;
  diff::AdamState critic_opt;
  diff::AdamState alpha_opt;
  std::int64_t updates = 0;
};

SacAgent make_agent(std::size_t state_dim, std::size_t action_dim, const SacConfig& config, std::mt19937_64& rng);

/// Squashed-Gaussian samples for rows of `states` given standard-normal `noise`.
struct PolicySample {
  diff::Matrix mean;     // pre-squash mean
  diff::Matrix log_std;  // bounded
  diff::Matrix actions;  // tanh(mean + std * noise)
  Eigen::VectorXd log_prob;
};
PolicySample sample_policy(const AgentParams& params, const Eigen::Ref<const diff::Matrix>& states,
                           const Eigen::Ref<const diff::Matrix>& noise);

/// Bounded log-std from raw network output.
double bound_log_std(double raw, double lo, double hi);

/// Log-density of a = tanh(u), u ~ N(mean, exp(log_std)^2), per component
/// summed, written directly from the change-of-variables formula.
double tanh_gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                              std::span<const double> pre_tanh);

/// Stochastic mode samples; deterministic mode returns tanh(mean).
std::vector<double> select_action(const AgentParams& params, std::span<const double> state, bool deterministic,
                                  std::mt19937_64& rng);

/// Standard-normal matrix.
diff::Matrix gaussian_noise(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// Bootstrapped target r + discount * not_done * (min target Q - alpha * log pi).
diff::Matrix critic_target(const AgentParams& params, const Batch& batch, const Eigen::Ref<const diff::Matrix>& noise,
                           double discount);

/// mean((Q1 - y)^2) + mean((Q2 - y)^2) over the batch.
diff::Var critic_loss(diff::Tape& tape, const AgentParams& params, const diff::MlpVars& q1, const diff::MlpVars& q2,
                      const Batch& batch, const Eigen::Ref<const diff::Matrix>& target);

struct ActorTerms {
  diff::Var loss;      // mean(alpha * log pi - min Q)
  diff::Var log_prob;  // [n, 1]
};
/// Actor objective with the critics held fixed (bound as constants by the caller).
ActorTerms actor_loss(diff::Tape& tape, const AgentParams& params, const diff::MlpVars& actor,
                      const diff::MlpVars& q1, const diff::MlpVars& q2, const Eigen::Ref<const diff::Matrix>& states,
                      const Eigen::Ref<const diff::Matrix>& noise, double alpha);

/// target <- momentum * source + (1 - momentum) * target.
void soft_update(diff::MlpParams& target, const diff::MlpParams& source, double momentum);

struct UpdateReport {
  double critic_loss = 0.0;
  double actor_loss = 0.0;  // NaN when the actor was not updated
  double temperature = 0.0;
  bool actor_updated = false;
};

/// One SAC update. Throws NumericError when a loss is non-finite.
UpdateReport update(SacAgent& agent, const Batch& batch, std::mt19937_64& rng);

diff::Checkpoint to_checkpoint(const AgentParams& params);
AgentParams agent_from_checkpoint(const diff::Checkpoint& ckpt);

}  // namespace xirl::rl
