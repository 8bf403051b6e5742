#include "xirl/rl/trainer.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <string>

#include "xirl/common/csv.hpp"
#include "xirl/common/errors.hpp"
#include "xirl/demo/generate.hpp"
#include "xirl/env/render.hpp"

namespace xirl::rl {
namespace {

env::Action to_action(std::span<const double> a) {
  env::Action out;
  out.forward = a.size() > 0 ? a[0] : 0.0;
  out.turn = a.size() > 1 ? a[1] : 0.0;
  out.grip = a.size() > 2 ? a[2] : 0.0;
  return out;
}

}  // namespace

RewardSource parse_reward_source(std::string_view name) {
  if (name == "env") return RewardSource::kEnv;
  if (name == "learned") return RewardSource::kLearned;
  if (name == "learned+sparse") return RewardSource::kLearnedSparse;
  throw ConfigError("unknown reward source '" + std::string(name) + "'");
}

std::string_view to_string(RewardSource source) {
  switch (source) {
    case RewardSource::kEnv: return "env";
    case RewardSource::kLearned: return "learned";
    case RewardSource::kLearnedSparse: return "learned+sparse";
  }
  return "env";
}

std::uint64_t eval_seed(std::uint64_t train_seed) { return train_seed ^ 0x5eed5eed5eed5eedULL; }

EvalResult evaluate(const PolicyFn& policy, env::Embodiment embodiment, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ContractError("evaluate: episodes must be at least 1");
  EvalResult out;
  env::FrameStacker stacker;
  for (int ep = 0; ep < episodes; ++ep) {
    env::EnvState s = env::reset(embodiment, demo::episode_seed(seed, ep));
    stacker.reset(env::state_vector(s));
    double ret = 0.0;
    double last = env::in_zone_fraction(s);
    bool done = false;
    while (!done) {
      const auto obs = stacker.stacked();
      const auto a = policy(s, obs);
      const auto r = env::step(s, to_action(a));
      s = r.state;
      stacker.push(env::state_vector(s));
      ret += r.reward;
      last = r.reward;
      done = r.done;
    }
    out.success_rate += last;
    out.mean_env_return += ret;
  }
  out.success_rate /= episodes;
  out.mean_env_return /= episodes;
  return out;
}

EvalResult evaluate(const AgentParams& policy, env::Embodiment embodiment, int episodes, std::uint64_t seed) {
  if (policy.action_dim != static_cast<std::size_t>(env::spec(embodiment).action_dim)) {
    throw DimensionError("evaluate: policy action width does not match the embodiment");
  }
  std::mt19937_64 unused(0);
  return evaluate(
      [&](const env::EnvState&, std::span<const double> obs) { return select_action(policy, obs, true, unused); },
      embodiment, episodes, seed);
}

PolicyTrainResult train_policy(env::Embodiment embodiment, RewardSource source, const reward::RewardModel* model,
                               const SacConfig& config, const CurveCallback& on_row) {
  config.validate();
  if (source != RewardSource::kEnv && model == nullptr) {
    throw ConfigError("reward source '" + std::string(to_string(source)) + "' needs a reward model checkpoint");
  }
  const auto action_dim = static_cast<std::size_t>(env::spec(embodiment).action_dim);
  std::mt19937_64 rng(config.seed);
  SacAgent agent = make_agent(env::kStackedStateDim, action_dim, config, rng);
  ReplayBuffer replay(config.replay_capacity, env::kStackedStateDim, action_dim);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  std::vector<std::uint8_t> frame;
  if (model != nullptr) frame.resize(model->encoder.input_dim());

  PolicyTrainResult result;
  int episode = 0;
  env::EnvState state = env::reset(embodiment, demo::episode_seed(config.seed, episode));
  env::FrameStacker stacker;
  stacker.reset(env::state_vector(state));
  double episode_return = 0.0;
  double window_return = 0.0;
  int window_episodes = 0;
  UpdateReport last_report;
  last_report.actor_loss = std::numeric_limits<double>::quiet_NaN();
  last_report.critic_loss = std::numeric_limits<double>::quiet_NaN();
  last_report.temperature = agent.params.temperature();

  for (int t = 0; t < config.total_steps; ++t) {
    const auto obs = stacker.stacked();
    std::vector<double> action(action_dim);
    if (t < config.seed_steps) {
      for (auto& a : action) a = uniform(rng);
    } else {
      action = select_action(agent.params, obs, false, rng);
    }
    const auto r = env::step(state, to_action(action));
    state = r.state;
    stacker.push(env::state_vector(state));
    const auto next_obs = stacker.stacked();

    double reward = r.reward;
    if (source != RewardSource::kEnv) {
      env::render_into(state, model->encoder.grid_size, frame.data());
      reward = (*model)(frame);
      if (source == RewardSource::kLearnedSparse) reward += r.reward;
    }
    // Time-limit ends are not terminal: the value bootstraps through them.
    replay.add(obs, action, reward, next_obs, false);
    result.rewards.add(reward);
    episode_return += reward;

    if (t >= config.seed_steps) {
      const UpdateReport rep = update(agent, replay.sample(static_cast<std::size_t>(config.batch_size), rng), rng);
      last_report.critic_loss = rep.critic_loss;
      last_report.temperature = rep.temperature;
      if (rep.actor_updated) last_report.actor_loss = rep.actor_loss;
    }

    if (r.done) {
      window_return += episode_return;
      ++window_episodes;
      episode_return = 0.0;
      state = env::reset(embodiment, demo::episode_seed(config.seed, ++episode));
      stacker.reset(env::state_vector(state));
    }

    if ((t + 1) % config.eval_period == 0) {
      CurveRow row;
      row.step = t + 1;
      row.success_rate = evaluate(agent.params, embodiment, config.eval_episodes, eval_seed(config.seed)).success_rate;
      row.mean_episode_reward =
          window_episodes > 0 ? window_return / window_episodes : std::numeric_limits<double>::quiet_NaN();
      row.actor_loss = last_report.actor_loss;
      row.critic_loss = last_report.critic_loss;
      row.temperature = last_report.temperature;
      window_return = 0.0;
      window_episodes = 0;
      result.curve.push_back(row);
      if (on_row) on_row(row);
    }
  }
  result.policy = agent.params;
  return result;
}

void RewardStats::add(double r) {
  if (count == 0) {
    min = max = r;
  } else {
    min = std::min(min, r);
    max = std::max(max, r);
  }
  ++count;
  mean += (r - mean) / static_cast<double>(count);
}

void write_curve_csv(std::ostream& out, std::span<const CurveRow> rows) {
  CsvWriter w(out, {"step", "success_rate", "mean_episode_reward", "actor_loss", "critic_loss", "temperature"});
  for (const auto& r : rows) {
    w.row({double(r.step), r.success_rate, r.mean_episode_reward, r.actor_loss, r.critic_loss, r.temperature});
  }
}

}  // namespace xirl::rl
