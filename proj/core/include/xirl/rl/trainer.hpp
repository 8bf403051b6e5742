#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "xirl/env/sweep_env.hpp"
#include "xirl/reward/reward_model.hpp"
#include "xirl/rl/sac.hpp"

namespace xirl::rl {

enum class RewardSource { kEnv, kLearned, kLearnedSparse };

RewardSource parse_reward_source(std::string_view name);
std::string_view to_string(RewardSource source);

struct CurveRow {
  int step = 0;
  double success_rate = 0.0;         // mean end-of-episode in-zone fraction, deterministic policy
  double mean_episode_reward = 0.0;  // mean training return since the previous row
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double temperature = 0.0;
};

struct EvalResult {
  double success_rate = 0.0;
  double mean_env_return = 0.0;
};

/// Maps (state, stacked observation) to an action of the embodiment's width.
using PolicyFn = std::function<std::vector<double>(const env::EnvState&, std::span<const double>)>;

/// Runs `episodes` full-horizon episodes whose reset seeds derive from `seed`.
EvalResult evaluate(const PolicyFn& policy, env::Embodiment embodiment, int episodes, std::uint64_t seed);
/// Deterministic (mean) actions of a trained policy.
EvalResult evaluate(const AgentParams& policy, env::Embodiment embodiment, int episodes, std::uint64_t seed);

/// Seed of the evaluation episodes used by train_policy.
std::uint64_t eval_seed(std::uint64_t train_seed);

struct RewardStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::int64_t count = 0;

  void add(double r);
};

struct PolicyTrainResult {
  AgentParams policy;
  std::vector<CurveRow> curve;
  RewardStats rewards;  // transition rewards stored in the replay buffer
};

using CurveCallback = std::function<void(const CurveRow&)>;

/// Seeds the replay with uniform random actions, then alternates one
/// environment step with one SAC update. Learned sources render each new
/// observation and store r(s') as the transition reward. Throws ConfigError
/// when a learned source has no reward model.
PolicyTrainResult train_policy(env::Embodiment embodiment, RewardSource source, const reward::RewardModel* model,
                               const SacConfig& config, const CurveCallback& on_row = {});

/// CSV step,success_rate,mean_episode_reward,actor_loss,critic_loss,temperature.
void write_curve_csv(std::ostream& out, std::span<const CurveRow> rows);

}  // namespace xirl::rl
