#include "xirl/rl/sac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "xirl/common/errors.hpp"

namespace xirl::rl {
namespace {

using diff::Matrix;
using diff::Var;

constexpr double kLog2 = std::numbers::ln2;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

diff::AdamConfig adam_config(double lr, const SacConfig& c) { return {lr, c.beta1, c.beta2, 1e-8, 0.0}; }

std::vector<const diff::Tensor*> const_tensors(std::vector<diff::Tensor*> ts) { return {ts.begin(), ts.end()}; }

std::vector<diff::Tensor*> critic_tensors(AgentParams& p) {
  auto a = p.critic1.tensors();
  auto b = p.critic2.tensors();
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Matrix concat(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

/// log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), stable for large |u|.
double log_one_minus_tanh_sq(double u) {
  const double x = -2.0 * u;
  const double softplus = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return 2.0 * (kLog2 - u - softplus);
}

struct TapeSample {
  Var actions;
  Var log_prob;
};

TapeSample sample_on_tape(diff::Tape& tape, const AgentParams& p, const diff::MlpVars& actor, Var states,
                          const Eigen::Ref<const Matrix>& noise) {
  const auto a = p.action_dim;
  const Var out = diff::forward_mlp(tape, p.actor, actor, states);
  const Var mean = tape.slice_cols(out, 0, a);
  const Var raw = tape.slice_cols(out, a, a);
  const double half_range = 0.5 * (p.log_std_max - p.log_std_min);
  const Var log_std = tape.add_scalar(tape.scale(tape.add_scalar(tape.tanh(raw), 1.0), half_range), p.log_std_min);
  const Var eps = tape.constant(Matrix(noise));
  const Var pre = tape.add(mean, tape.mul(tape.exp(log_std), eps));
  const Var act = tape.tanh(pre);
  // Gaussian term: -eps^2/2 - log_std - log(2 pi)/2 per component.
  const Var gauss = tape.sub(tape.constant(Matrix((-0.5 * noise.array().square() - kHalfLog2Pi).matrix())), log_std);
  // Squash correction log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)).
  const Var corr = tape.scale(tape.add_scalar(tape.neg(tape.add(pre, tape.softplus(tape.scale(pre, -2.0)))), kLog2), 2.0);
  const Var log_prob = tape.row_sum(tape.sub(gauss, corr));
  return {act, log_prob};
}

Var q_value(diff::Tape& tape, const diff::MlpParams& q, const diff::MlpVars& vars, Var states, Var actions) {
  return diff::forward_mlp(tape, q, vars, tape.concat_cols(states, actions));
}

}  // namespace

void SacConfig::validate() const {
  if (total_steps < 0 || seed_steps < 0) throw ConfigError("sac: step counts must be non-negative");
  if (batch_size < 1 || replay_capacity < 1) throw ConfigError("sac: batch size and replay capacity must be positive");
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("sac: discount must lie in (0, 1]");
  if (!(target_momentum >= 0.0 && target_momentum <= 1.0)) throw ConfigError("sac: target momentum must lie in [0, 1]");
  if (actor_update_period < 1 || target_update_period < 1) throw ConfigError("sac: update periods must be positive");
  if (!(initial_temperature > 0.0)) throw ConfigError("sac: initial temperature must be positive");
  if (!(log_std_min < log_std_max)) throw ConfigError("sac: log-std bounds must be ordered");
  if (hidden.empty()) throw ConfigError("sac: at least one hidden layer");
  if (eval_period < 1 || eval_episodes < 1) throw ConfigError("sac: eval period and episodes must be positive");
  if (!(actor_lr > 0.0 && critic_lr > 0.0 && temperature_lr > 0.0)) throw ConfigError("sac: learning rates must be positive");
}

double AgentParams::temperature() const { return std::exp(log_alpha[0]); }

SacAgent make_agent(std::size_t state_dim, std::size_t action_dim, const SacConfig& config, std::mt19937_64& rng) {
  config.validate();
  SacAgent agent;
  agent.config = config;
  auto& p = agent.params;
  p.state_dim = state_dim;
  p.action_dim = action_dim;
  p.log_std_min = config.log_std_min;
  p.log_std_max = config.log_std_max;
  std::vector<std::size_t> actor_w = {state_dim};
  actor_w.insert(actor_w.end(), config.hidden.begin(), config.hidden.end());
  actor_w.push_back(2 * action_dim);
  std::vector<std::size_t> critic_w = {state_dim + action_dim};
  critic_w.insert(critic_w.end(), config.hidden.begin(), config.hidden.end());
  critic_w.push_back(1);
  using diff::Activation;
  p.actor = diff::make_mlp(actor_w, Activation::kRelu, Activation::kIdentity, diff::InitScheme::kOrthogonal, rng);
  p.critic1 = diff::make_mlp(critic_w, Activation::kRelu, Activation::kIdentity, diff::InitScheme::kOrthogonal, rng);
  p.critic2 = diff::make_mlp(critic_w, Activation::kRelu, Activation::kIdentity, diff::InitScheme::kOrthogonal, rng);
  p.target1 = p.critic1;
  p.target2 = p.critic2;
  p.log_alpha = diff::Tensor({1}, std::log(config.initial_temperature));
  agent.actor_opt = diff::make_adam(adam_config(config.actor_lr, config), const_tensors(p.actor.tensors()));
  agent.critic_opt = diff::make_adam(adam_config(config.critic_lr, config), const_tensors(critic_tensors(p)));
  const std::vector<const diff::Tensor*> alpha = {&p.log_alpha};
  agent.alpha_opt = diff::make_adam(adam_config(config.temperature_lr, config), alpha);
  return agent;
}

double bound_log_std(double raw, double lo, double hi) { return lo + 0.5 * (hi - lo) * (std::tanh(raw) + 1.0); }

double tanh_gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                              std::span<const double> pre_tanh) {
  double lp = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double sd = std::exp(log_std[j]);
    const double z = (pre_tanh[j] - mean[j]) / sd;
    lp += -0.5 * z * z - log_std[j] - kHalfLog2Pi;
    lp -= std::log(1.0 - std::tanh(pre_tanh[j]) * std::tanh(pre_tanh[j]));
  }
  return lp;
}

PolicySample sample_policy(const AgentParams& p, const Eigen::Ref<const Matrix>& states,
                           const Eigen::Ref<const Matrix>& noise) {
  const auto a = static_cast<Eigen::Index>(p.action_dim);
  const Matrix out = diff::forward_mlp(p.actor, states);
  PolicySample s;
  s.mean = out.leftCols(a);
  s.log_std = out.rightCols(a).unaryExpr([&](double r) { return bound_log_std(r, p.log_std_min, p.log_std_max); });
  const Matrix pre = s.mean.array() + s.log_std.array().exp() * noise.array();
  s.actions = pre.array().tanh();
  s.log_prob.resize(states.rows());
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    double lp = 0.0;
    for (Eigen::Index j = 0; j < a; ++j) {
      lp += -0.5 * noise(i, j) * noise(i, j) - s.log_std(i, j) - kHalfLog2Pi - log_one_minus_tanh_sq(pre(i, j));
    }
    s.log_prob(i) = lp;
  }
  return s;
}

Matrix gaussian_noise(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

std::vector<double> select_action(const AgentParams& p, std::span<const double> state, bool deterministic,
                                  std::mt19937_64& rng) {
  if (state.size() != p.state_dim) throw DimensionError("select_action: state width differs from the policy");
  const Eigen::Map<const Matrix> s(state.data(), 1, static_cast<Eigen::Index>(state.size()));
  const auto a = static_cast<Eigen::Index>(p.action_dim);
  const Matrix noise = deterministic ? Matrix::Zero(1, a) : gaussian_noise(1, a, rng);
  const PolicySample sample = sample_policy(p, s, noise);
  std::vector<double> out(p.action_dim);
  for (Eigen::Index j = 0; j < a; ++j) {
    out[static_cast<std::size_t>(j)] = std::clamp(deterministic ? std::tanh(sample.mean(0, j)) : sample.actions(0, j), -1.0, 1.0);
  }
  return out;
}

Matrix critic_target(const AgentParams& p, const Batch& b, const Eigen::Ref<const Matrix>& noise, double discount) {
  const PolicySample next = sample_policy(p, b.next_states, noise);
  const Matrix in = concat(b.next_states, next.actions);
  const Matrix q1 = diff::forward_mlp(p.target1, in);
  const Matrix q2 = diff::forward_mlp(p.target2, in);
  const double alpha = p.temperature();
  Matrix y(b.rewards.rows(), 1);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double v = std::min(q1(i, 0), q2(i, 0)) - alpha * next.log_prob(i);
    y(i, 0) = b.rewards(i, 0) + discount * b.not_done(i, 0) * v;
  }
  return y;
}

Var critic_loss(diff::Tape& tape, const AgentParams& p, const diff::MlpVars& q1, const diff::MlpVars& q2,
                const Batch& b, const Eigen::Ref<const Matrix>& target) {
  const Var s = tape.constant(b.states);
  const Var a = tape.constant(b.actions);
  const Var y = tape.constant(Matrix(target));
  const Var l1 = tape.mean(tape.square(tape.sub(q_value(tape, p.critic1, q1, s, a), y)));
  const Var l2 = tape.mean(tape.square(tape.sub(q_value(tape, p.critic2, q2, s, a), y)));
  return tape.add(l1, l2);
}

ActorTerms actor_loss(diff::Tape& tape, const AgentParams& p, const diff::MlpVars& actor, const diff::MlpVars& q1,
                      const diff::MlpVars& q2, const Eigen::Ref<const Matrix>& states,
                      const Eigen::Ref<const Matrix>& noise, double alpha) {
  const Var s = tape.constant(Matrix(states));
  const TapeSample sample = sample_on_tape(tape, p, actor, s, noise);
  const Var q = tape.minimum(q_value(tape, p.critic1, q1, s, sample.actions),
                             q_value(tape, p.critic2, q2, s, sample.actions));
  const Var loss = tape.mean(tape.sub(tape.scale(sample.log_prob, alpha), q));
  return {loss, sample.log_prob};
}

void soft_update(diff::MlpParams& target, const diff::MlpParams& source, double momentum) {
  auto t = target.tensors();
  const auto s = source.tensors();
  if (t.size() != s.size()) throw DimensionError("soft_update: networks differ in structure");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i]->shape() != s[i]->shape()) throw DimensionError("soft_update: tensor shapes differ");
    auto tv = t[i]->values();
    const auto sv = s[i]->values();
    if (momentum == 1.0) {
      std::copy(sv.begin(), sv.end(), tv.begin());
      continue;
    }
    for (std::size_t k = 0; k < tv.size(); ++k) tv[k] = momentum * sv[k] + (1.0 - momentum) * tv[k];
  }
}

UpdateReport update(SacAgent& agent, const Batch& batch, std::mt19937_64& rng) {
  auto& p = agent.params;
  const auto n = batch.states.rows();
  const auto a = static_cast<Eigen::Index>(p.action_dim);
  UpdateReport report;

  {
    const Matrix y = critic_target(p, batch, gaussian_noise(n, a, rng), agent.config.discount);
    diff::Tape tape;
    const auto v1 = diff::bind_parameters(tape, p.critic1);
    const auto v2 = diff::bind_parameters(tape, p.critic2);
    const Var loss = critic_loss(tape, p, v1, v2, batch, y);
    report.critic_loss = tape.scalar(loss);
    if (!std::isfinite(report.critic_loss)) throw NumericError("sac: critic loss is not finite");
    tape.backward(loss);
    auto grads = diff::collect_grads(tape, p.critic1, v1);
    auto g2 = diff::collect_grads(tape, p.critic2, v2);
    grads.insert(grads.end(), g2.begin(), g2.end());
    diff::adam_step(agent.critic_opt, critic_tensors(p), grads);
  }

  report.actor_loss = std::numeric_limits<double>::quiet_NaN();
  if (agent.updates % agent.config.actor_update_period == 0) {
    const double alpha = p.temperature();
    diff::Tape tape;
    const auto va = diff::bind_parameters(tape, p.actor);
    const auto v1 = diff::bind_constants(tape, p.critic1);
    const auto v2 = diff::bind_constants(tape, p.critic2);
    const ActorTerms terms = actor_loss(tape, p, va, v1, v2, batch.states, gaussian_noise(n, a, rng), alpha);
    report.actor_loss = tape.scalar(terms.loss);
    if (!std::isfinite(report.actor_loss)) throw NumericError("sac: actor loss is not finite");
    tape.backward(terms.loss);
    diff::adam_step(agent.actor_opt, p.actor.tensors(), diff::collect_grads(tape, p.actor, va));
    report.actor_updated = true;

    if (agent.config.learn_temperature) {
      // d/dlog_alpha of mean(alpha * (-log_pi - target_entropy)) with log_pi held fixed.
      const double target_entropy = -static_cast<double>(p.action_dim);
      const double mean_lp = tape.value(terms.log_prob).mean();
      const double g = alpha * (-mean_lp - target_entropy);
      const std::vector<diff::Tensor> grad = {diff::Tensor({1}, g)};
      const std::vector<diff::Tensor*> params = {&p.log_alpha};
      diff::adam_step(agent.alpha_opt, params, grad);
    }
  }

  if (agent.updates % agent.config.target_update_period == 0) {
    soft_update(p.target1, p.critic1, agent.config.target_momentum);
    soft_update(p.target2, p.critic2, agent.config.target_momentum);
  }
  ++agent.updates;
  report.temperature = p.temperature();
  return report;
}

diff::Checkpoint to_checkpoint(const AgentParams& p) {
  diff::Checkpoint c;
  diff::store_mlp(c, "actor", p.actor);
  diff::store_mlp(c, "critic1", p.critic1);
  diff::store_mlp(c, "critic2", p.critic2);
  diff::store_mlp(c, "target1", p.target1);
  diff::store_mlp(c, "target2", p.target2);
  c.tensors.emplace_back("log_alpha", p.log_alpha);
  c.metadata["kind"] = "policy";
  c.metadata["state_dim"] = p.state_dim;
  c.metadata["action_dim"] = p.action_dim;
  c.metadata["log_std_min"] = p.log_std_min;
  c.metadata["log_std_max"] = p.log_std_max;
  return c;
}

AgentParams agent_from_checkpoint(const diff::Checkpoint& c) {
  AgentParams p;
  try {
    if (c.metadata.value("kind", std::string()) != "policy") throw FormatError("checkpoint does not hold a policy");
    p.state_dim = c.metadata.at("state_dim").get<std::size_t>();
    p.action_dim = c.metadata.at("action_dim").get<std::size_t>();
    p.log_std_min = c.metadata.at("log_std_min").get<double>();
    p.log_std_max = c.metadata.at("log_std_max").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("policy metadata: ") + ex.what());
  }
  p.actor = diff::load_mlp(c, "actor");
  p.critic1 = diff::load_mlp(c, "critic1");
  p.critic2 = diff::load_mlp(c, "critic2");
  p.target1 = diff::load_mlp(c, "target1");
  p.target2 = diff::load_mlp(c, "target2");
  p.log_alpha = c.tensor("log_alpha");
  if (p.actor.in_features() != p.state_dim || p.actor.out_features() != 2 * p.action_dim) {
    throw FormatError("policy network does not match its recorded dimensions");
  }
  return p;
}

}  // namespace xirl::rl
