#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "support.hpp"
#include "xirl/common/errors.hpp"
#include "xirl/diffcore/grad_check.hpp"
#include "xirl/env/oracle.hpp"
#include "xirl/rl/replay.hpp"
#include "xirl/rl/sac.hpp"
#include "xirl/rl/trainer.hpp"

namespace xirl::rl {
namespace {

using diff::Matrix;
using diff::Tape;
using diff::Var;

SacConfig tiny_config() {
  SacConfig c;
  c.hidden = {16};
  c.batch_size = 16;
  c.seed_steps = 100;
  c.total_steps = 300;
  c.eval_period = 100;
  c.eval_episodes = 2;
  c.replay_capacity = 1000;
  return c;
}

std::vector<double> row(std::initializer_list<double> v) { return v; }

TEST(Replay, FifoEviction) {
  ReplayBuffer buf(3, 1, 1);
  for (int i = 0; i < 5; ++i) buf.add(row({0.0}), row({0.0}), i, row({0.0}), false);
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.reward_at(0), 2.0);
  EXPECT_EQ(buf.reward_at(2), 4.0);
}

TEST(Replay, RejectsBadTransitions) {
  ReplayBuffer buf(4, 2, 1);
  EXPECT_THROW(buf.add(row({0.0}), row({0.0}), 0, row({0.0, 0.0}), false), ContractError);
  EXPECT_THROW(buf.add(row({0.0, 0.0}), row({1.5}), 0, row({0.0, 0.0}), false), ContractError);
  EXPECT_THROW(buf.add(row({0.0, NAN}), row({0.0}), 0, row({0.0, 0.0}), false), NumericError);
  EXPECT_THROW(buf.add(row({0.0, 0.0}), row({0.0}), INFINITY, row({0.0, 0.0}), false), NumericError);
  std::mt19937_64 rng(0);
  EXPECT_THROW((void)buf.sample(2, rng), ContractError);
}

TEST(Replay, SampleCarriesTransitionFields) {
  ReplayBuffer buf(10, 1, 1);
  for (int i = 0; i < 10; ++i) buf.add(row({double(i)}), row({i / 10.0}), 10.0 * i, row({i + 0.5}), i == 3);
  std::mt19937_64 rng(1);
  const Batch b = buf.sample(200, rng);
  std::vector<int> hits(10, 0);
  for (Eigen::Index r = 0; r < 200; ++r) {
    const int i = static_cast<int>(b.states(r, 0));
    ++hits[static_cast<std::size_t>(i)];
    EXPECT_DOUBLE_EQ(b.actions(r, 0), i / 10.0);
    EXPECT_DOUBLE_EQ(b.rewards(r, 0), 10.0 * i);
    EXPECT_DOUBLE_EQ(b.next_states(r, 0), i + 0.5);
    EXPECT_EQ(b.not_done(r, 0), i == 3 ? 0.0 : 1.0);
  }
  for (int h : hits) EXPECT_GT(h, 0);
}

class AgentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(3);
    SacConfig c = tiny_config();
    c.hidden = {8};
    agent = make_agent(5, 2, c, rng);
    batch.states = testing::random_matrix(4, 5, rng);
    batch.actions = testing::random_matrix(4, 2, rng, 0.9);
    batch.rewards = testing::random_matrix(4, 1, rng);
    batch.next_states = testing::random_matrix(4, 5, rng);
    batch.not_done = Matrix::Ones(4, 1);
    batch.not_done(1, 0) = 0.0;
    noise = testing::random_matrix(4, 2, rng);
  }

  SacAgent agent;
  Batch batch;
  Matrix noise;
};

TEST_F(AgentTest, DeterministicActionIsTanhOfMean) {
  auto& p = agent.params;
  for (auto* t : p.actor.tensors()) std::fill(t->values().begin(), t->values().end(), 0.0);
  std::mt19937_64 rng(0);
  const std::vector<double> s(5, 0.3);
  EXPECT_EQ(select_action(p, s, true, rng), (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW((void)select_action(p, std::vector<double>(4), true, rng), DimensionError);
}

TEST_F(AgentTest, StochasticActionsStayInBounds) {
  std::mt19937_64 rng(9);
  const std::vector<double> s = {1, -2, 3, 0.5, 0};
  for (int i = 0; i < 10000; ++i) {
    for (double a : select_action(agent.params, s, false, rng)) {
      ASSERT_GE(a, -1.0);
      ASSERT_LE(a, 1.0);
    }
  }
}

TEST_F(AgentTest, LogProbMatchesChangeOfVariables) {
  const auto& p = agent.params;
  const PolicySample s = sample_policy(p, batch.states, noise);
  const Matrix out = diff::forward_mlp(p.actor, batch.states);
  for (Eigen::Index i = 0; i < 4; ++i) {
    double oracle = 0.0;
    std::vector<double> mean, log_std, pre;
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double m = out(i, j);
      const double ls = p.log_std_min + 0.5 * (p.log_std_max - p.log_std_min) * (std::tanh(out(i, 2 + j)) + 1.0);
      const double sd = std::exp(ls);
      const double u = m + sd * noise(i, j);
      const double a = std::tanh(u);
      EXPECT_NEAR(s.actions(i, j), a, 1e-12);
      // N(u; m, sd) divided by |da/du| = 1 - a^2.
      const double density = std::exp(-0.5 * std::pow((u - m) / sd, 2)) / (sd * std::sqrt(2 * std::numbers::pi));
      oracle += std::log(density / (1.0 - a * a));
      mean.push_back(m);
      log_std.push_back(ls);
      pre.push_back(u);
    }
    EXPECT_NEAR(s.log_prob(i), oracle, 1e-9);
    EXPECT_NEAR(tanh_gaussian_log_prob(mean, log_std, pre), oracle, 1e-9);
  }
}

TEST_F(AgentTest, LogStdIsBounded) {
  EXPECT_NEAR(bound_log_std(-50, -5, 2), -5.0, 1e-12);
  EXPECT_NEAR(bound_log_std(50, -5, 2), 2.0, 1e-12);
  EXPECT_NEAR(bound_log_std(0, -5, 2), -1.5, 1e-12);
}

TEST_F(AgentTest, SoftUpdateExtremes) {
  auto& p = agent.params;
  diff::MlpParams target = p.target1;
  for (auto* t : p.critic1.tensors()) {
    for (auto& v : t->values()) v += 1.0;
  }
  diff::MlpParams untouched = target;
  soft_update(untouched, p.critic1, 0.0);
  EXPECT_EQ(untouched, target);
  diff::MlpParams half = target;
  soft_update(half, p.critic1, 0.5);
  const auto ht = half.tensors();
  const auto tt = target.tensors();
  for (std::size_t i = 0; i < ht.size(); ++i) {
    for (std::size_t k = 0; k < ht[i]->size(); ++k) EXPECT_NEAR(ht[i]->values()[k], tt[i]->values()[k] + 0.5, 1e-12);
  }
  soft_update(target, p.critic1, 1.0);
  EXPECT_EQ(target, p.critic1);
}

TEST_F(AgentTest, CriticTargetMatchesScalarRecomputation) {
  const auto& p = agent.params;
  const Matrix y = critic_target(p, batch, noise, 0.9);
  const PolicySample next = sample_policy(p, batch.next_states, noise);
  for (Eigen::Index i = 0; i < 4; ++i) {
    Matrix in(1, 7);
    in << batch.next_states.row(i), next.actions.row(i);
    const double q = std::min(diff::forward_mlp(p.target1, in)(0, 0), diff::forward_mlp(p.target2, in)(0, 0));
    const double expect = batch.rewards(i, 0) + 0.9 * batch.not_done(i, 0) * (q - p.temperature() * next.log_prob(i));
    EXPECT_NEAR(y(i, 0), expect, 1e-12);
  }
  EXPECT_NEAR(y(1, 0), batch.rewards(1, 0), 1e-15);
}

TEST_F(AgentTest, CriticGradientMatchesFiniteDifferences) {
  const auto& p = agent.params;
  const Matrix y = critic_target(p, batch, noise, 0.99);
  std::vector<diff::Tensor> params;
  for (const auto* t : p.critic1.tensors()) params.push_back(*t);
  for (const auto* t : p.critic2.tensors()) params.push_back(*t);
  const std::size_t half = params.size() / 2;
  const diff::LossFn f = [&](Tape& t, std::span<const Var> v) {
    diff::MlpVars q1{{v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half)}};
    diff::MlpVars q2{{v.begin() + static_cast<std::ptrdiff_t>(half), v.end()}};
    return critic_loss(t, p, q1, q2, batch, y);
  };
  diff::GradCheckOptions opt;
  opt.coordinates = 200;
  opt.probe_offset = 1e-3;
  EXPECT_LT(diff::grad_check(f, params, opt).max_relative_error, 1e-4);
}

TEST_F(AgentTest, ActorGradientMatchesFiniteDifferences) {
  const auto& p = agent.params;
  std::vector<diff::Tensor> params;
  for (const auto* t : p.actor.tensors()) params.push_back(*t);
  const diff::LossFn f = [&](Tape& t, std::span<const Var> v) {
    diff::MlpVars actor{{v.begin(), v.end()}};
    const auto q1 = diff::bind_constants(t, p.critic1);
    const auto q2 = diff::bind_constants(t, p.critic2);
    return actor_loss(t, p, actor, q1, q2, batch.states, noise, 0.2).loss;
  };
  diff::GradCheckOptions opt;
  opt.coordinates = 200;
  opt.probe_offset = 1e-3;
  EXPECT_LT(diff::grad_check(f, params, opt).max_relative_error, 1e-4);
}

TEST_F(AgentTest, CriticLossIsSumOfMeanSquares) {
  const auto& p = agent.params;
  std::mt19937_64 rng(4);
  const Matrix y = testing::random_matrix(4, 1, rng);
  Tape tape;
  const auto v1 = diff::bind_constants(tape, p.critic1);
  const auto v2 = diff::bind_constants(tape, p.critic2);
  const double got = tape.scalar(critic_loss(tape, p, v1, v2, batch, y));
  Matrix in(4, 7);
  in << batch.states, batch.actions;
  const Matrix q1 = diff::forward_mlp(p.critic1, in), q2 = diff::forward_mlp(p.critic2, in);
  double expect = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) expect += (std::pow(q1(i, 0) - y(i, 0), 2) + std::pow(q2(i, 0) - y(i, 0), 2)) / 4.0;
  EXPECT_NEAR(got, expect, 1e-12);
}

TEST_F(AgentTest, UpdateSchedules) {
  std::mt19937_64 rng(5);
  const auto target_before = agent.params.target1;
  const auto r0 = update(agent, batch, rng);
  EXPECT_TRUE(r0.actor_updated);
  EXPECT_NE(agent.params.target1, target_before);
  const auto target_after = agent.params.target1;
  const auto actor_after = agent.params.actor;
  const auto r1 = update(agent, batch, rng);
  EXPECT_FALSE(r1.actor_updated);
  EXPECT_TRUE(std::isnan(r1.actor_loss));
  EXPECT_EQ(agent.params.actor, actor_after);
  EXPECT_EQ(agent.params.target1, target_after);
  EXPECT_EQ(agent.updates, 2);
}

TEST_F(AgentTest, CheckpointRoundTrip) {
  const auto back = agent_from_checkpoint(to_checkpoint(agent.params));
  EXPECT_EQ(back, agent.params);
  diff::Checkpoint bad = to_checkpoint(agent.params);
  bad.metadata["kind"] = "encoder";
  EXPECT_THROW((void)agent_from_checkpoint(bad), FormatError);
}

TEST(Config, Validation) {
  SacConfig c;
  EXPECT_NO_THROW(c.validate());
  c.discount = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.log_std_min = 3.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.hidden.clear();
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RewardSourceNames, RoundTrip) {
  for (auto s : {RewardSource::kEnv, RewardSource::kLearned, RewardSource::kLearnedSparse}) {
    EXPECT_EQ(parse_reward_source(to_string(s)), s);
  }
  EXPECT_THROW((void)parse_reward_source("dense"), ConfigError);
}

TEST(Stats, RunningSummary) {
  RewardStats s;
  for (double r : {0.5, -1.0, 2.0, 0.5}) s.add(r);
  EXPECT_EQ(s.count, 4);
  EXPECT_EQ(s.min, -1.0);
  EXPECT_EQ(s.max, 2.0);
  EXPECT_NEAR(s.mean, 0.5, 1e-15);
}

PolicyFn oracle_fn() {
  return [](const env::EnvState& s, std::span<const double>) {
    const env::Action a = env::oracle_policy(s);
    std::vector<double> out = {a.forward, a.turn};
    if (env::spec(s.embodiment).action_dim == 3) out.push_back(a.grip);
    return out;
  };
}

TEST(Evaluate, OracleSucceedsRandomFails) {
  for (auto e : {env::Embodiment::kLongstick, env::Embodiment::kGripper}) {
    EXPECT_GE(evaluate(oracle_fn(), e, 40, 11).success_rate, 0.95) << env::name(e);
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<double> u(-1, 1);
    const std::size_t dim = env::spec(e).action_dim;
    const PolicyFn random = [&](const env::EnvState&, std::span<const double>) {
      std::vector<double> a(dim);
      for (auto& x : a) x = u(rng);
      return a;
    };
    EXPECT_LT(evaluate(random, e, 40, 11).success_rate, 0.2) << env::name(e);
  }
}

TEST(Evaluate, SingleEpisodeIsReproducible) {
  std::mt19937_64 rng(2);
  const auto agent = make_agent(env::kStackedStateDim, 2, tiny_config(), rng);
  const auto a = evaluate(agent.params, env::Embodiment::kMediumstick, 1, 77);
  const auto b = evaluate(agent.params, env::Embodiment::kMediumstick, 1, 77);
  EXPECT_EQ(a.success_rate, b.success_rate);
  EXPECT_EQ(a.mean_env_return, b.mean_env_return);
}

TEST(Train, NoUpdatesLeavesInitialPolicy) {
  SacConfig c = tiny_config();
  c.total_steps = 100;
  c.seed_steps = 100;
  c.seed = 4;
  const auto result = train_policy(env::Embodiment::kLongstick, RewardSource::kEnv, nullptr, c);
  std::mt19937_64 rng(4);
  const auto init = make_agent(env::kStackedStateDim, 2, c, rng);
  EXPECT_EQ(result.policy, init.params);
  EXPECT_EQ(result.rewards.count, 100);
  ASSERT_EQ(result.curve.size(), 1u);
  EXPECT_TRUE(std::isnan(result.curve[0].critic_loss));
}

TEST(Train, SameSeedSameCurve) {
  SacConfig c = tiny_config();
  c.seed = 8;
  const auto run = [&] {
    std::ostringstream out;
    const auto r = train_policy(env::Embodiment::kShortstick, RewardSource::kEnv, nullptr, c);
    write_curve_csv(out, r.curve);
    return out.str();
  };
  const std::string a = run();
  EXPECT_EQ(a, run());
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 4);
}

TEST(Train, LearnedSourceNeedsModel) {
  EXPECT_THROW((void)train_policy(env::Embodiment::kLongstick, RewardSource::kLearned, nullptr, tiny_config()),
               ConfigError);
}

}  // namespace
}  // namespace xirl::rl
