#include "app/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <set>

#include "xirl/common/bytes.hpp"
#include "xirl/common/errors.hpp"

namespace xirl::app {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type (" + j.at(key).dump() + ")");
  }
}

const std::set<std::string> kReprKeys = {"iterations",   "batch_size",        "frames",
                                         "sampler",      "embedding_dim",     "hidden",
                                         "normalize",    "temperature",       "learn_temperature",
                                         "tcn_positive_window", "tcn_negative_window", "lambda_rec",
                                         "negative_gap", "learning_rate",     "beta1",
                                         "beta2",        "epsilon",           "weight_decay",
                                         "eval_period",  "eval_pairs",        "eval_train_videos",
                                         "early_stopping", "seed"};

void apply_repr(const json& j, repr::ReprTrainConfig& c) {
  const std::string w = "repr";
  read(j, "iterations", c.iterations, w);
  read(j, "batch_size", c.batch_size, w);
  read(j, "frames", c.frames, w);
  if (j.contains("sampler")) {
    std::string s;
    read(j, "sampler", s, w);
    c.sampler = demo::parse_sampler_mode(s);
  }
  read(j, "embedding_dim", c.embedding_dim, w);
  read(j, "hidden", c.hidden, w);
  read(j, "normalize", c.normalize, w);
  read(j, "temperature", c.temperature, w);
  read(j, "learn_temperature", c.learn_temperature, w);
  read(j, "tcn_positive_window", c.tcn_windows.positive, w);
  read(j, "tcn_negative_window", c.tcn_windows.negative, w);
  read(j, "lambda_rec", c.lambda_rec, w);
  read(j, "negative_gap", c.negative_gap, w);
  read(j, "learning_rate", c.adam.learning_rate, w);
  read(j, "beta1", c.adam.beta1, w);
  read(j, "beta2", c.adam.beta2, w);
  read(j, "epsilon", c.adam.epsilon, w);
  read(j, "weight_decay", c.adam.weight_decay, w);
  read(j, "eval_period", c.eval_period, w);
  read(j, "eval_pairs", c.eval_pairs, w);
  read(j, "eval_train_videos", c.eval_train_videos, w);
  read(j, "early_stopping", c.early_stopping, w);
  read(j, "seed", c.seed, w);
}

json sac_json(const rl::SacConfig& c) {
  return {{"total_steps", c.total_steps},
          {"discount", c.discount},
          {"replay_capacity", c.replay_capacity},
          {"batch_size", c.batch_size},
          {"seed_steps", c.seed_steps},
          {"target_momentum", c.target_momentum},
          {"actor_update_period", c.actor_update_period},
          {"target_update_period", c.target_update_period},
          {"initial_temperature", c.initial_temperature},
          {"learn_temperature", c.learn_temperature},
          {"log_std_min", c.log_std_min},
          {"log_std_max", c.log_std_max},
          {"hidden", c.hidden},
          {"actor_lr", c.actor_lr},
          {"critic_lr", c.critic_lr},
          {"temperature_lr", c.temperature_lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eval_period", c.eval_period},
          {"eval_episodes", c.eval_episodes},
          {"seed", c.seed}};
}

void apply_sac(const json& j, rl::SacConfig& c) {
  std::set<std::string> keys;
  const json defaults = sac_json(c);
  for (const auto& [k, _] : defaults.items()) keys.insert(k);
  reject_unknown(j, keys, "sac");
  const std::string w = "sac";
  read(j, "total_steps", c.total_steps, w);
  read(j, "discount", c.discount, w);
  read(j, "replay_capacity", c.replay_capacity, w);
  read(j, "batch_size", c.batch_size, w);
  read(j, "seed_steps", c.seed_steps, w);
  read(j, "target_momentum", c.target_momentum, w);
  read(j, "actor_update_period", c.actor_update_period, w);
  read(j, "target_update_period", c.target_update_period, w);
  read(j, "initial_temperature", c.initial_temperature, w);
  read(j, "learn_temperature", c.learn_temperature, w);
  read(j, "log_std_min", c.log_std_min, w);
  read(j, "log_std_max", c.log_std_max, w);
  read(j, "hidden", c.hidden, w);
  read(j, "actor_lr", c.actor_lr, w);
  read(j, "critic_lr", c.critic_lr, w);
  read(j, "temperature_lr", c.temperature_lr, w);
  read(j, "beta1", c.beta1, w);
  read(j, "beta2", c.beta2, w);
  read(j, "eval_period", c.eval_period, w);
  read(j, "eval_episodes", c.eval_episodes, w);
  read(j, "seed", c.seed, w);
  c.validate();
}

std::vector<env::Embodiment> parse_embodiments(const json& j, const std::string& where) {
  std::vector<env::Embodiment> out;
  if (!j.is_array()) throw ConfigError(where + ": expected a list of embodiment names");
  for (const auto& e : j) {
    const auto emb = e.is_string() ? env::parse_embodiment(e.get<std::string>()) : std::nullopt;
    if (!emb) throw ConfigError(where + ": unknown embodiment " + e.dump());
    out.push_back(*emb);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ConfigError(source + ": " + ex.what());
  }
  ExperimentConfig c;
  reject_unknown(j, {"output_root", "demos", "repr", "reward", "sac", "suite"}, source);
  read(j, "output_root", c.output_root, source);
  if (j.contains("demos")) {
    const auto& d = j.at("demos");
    reject_unknown(d, {"count", "seed", "grid_size"}, "demos");
    read(d, "count", c.demos.count, "demos");
    read(d, "seed", c.demos.seed, "demos");
    read(d, "grid_size", c.demos.grid_size, "demos");
    if (c.demos.count < 1) throw ConfigError("demos.count must be at least 1");
    if (c.demos.grid_size < 16) throw ConfigError("demos.grid_size must be at least 16");
  }
  if (j.contains("repr")) {
    reject_unknown(j.at("repr"), kReprKeys, "repr");
    repr::ReprTrainConfig probe;
    apply_repr(j.at("repr"), probe);  // type-checks every value now
    c.repr_overrides = j.at("repr");
  }
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    reject_unknown(r, {"distance"}, "reward");
    std::string kind = "squared";
    read(r, "distance", kind, "reward");
    c.distance = reward::parse_distance_kind(kind);
  }
  if (j.contains("sac")) apply_sac(j.at("sac"), c.sac);
  if (j.contains("suite")) {
    const auto& s = j.at("suite");
    reject_unknown(s, {"held_out", "policy_seeds", "heldout_demos"}, "suite");
    if (s.contains("held_out")) c.suite.held_out = parse_embodiments(s.at("held_out"), "suite.held_out");
    read(s, "policy_seeds", c.suite.policy_seeds, "suite");
    read(s, "heldout_demos", c.suite.heldout_demos, "suite");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const Error& ex) {
    throw ConfigError(ex.what());
  }
  return parse_config(std::string(bytes.begin(), bytes.end()), path);
}

repr::ReprTrainConfig resolve_repr(const ExperimentConfig& config, repr::Algorithm algorithm) {
  repr::ReprTrainConfig c = repr::default_train_config(algorithm);
  apply_repr(config.repr_overrides, c);
  try {
    c.validate();
  } catch (const ConfigError& ex) {
    throw ConfigError(std::string("repr: ") + ex.what());
  }
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c, repr::Algorithm algorithm) {
  json held = json::array();
  for (auto e : c.suite.held_out) held.push_back(std::string(env::name(e)));
  json repr = repr::config_to_json(resolve_repr(c, algorithm));
  return {{"output_root", c.output_root},
          {"demos", {{"count", c.demos.count}, {"seed", c.demos.seed}, {"grid_size", c.demos.grid_size}}},
          {"repr", repr},
          {"reward", {{"distance", std::string(reward::to_string(c.distance))}}},
          {"sac", sac_json(c.sac)},
          {"suite", {{"held_out", held}, {"policy_seeds", c.suite.policy_seeds}, {"heldout_demos", c.suite.heldout_demos}}}};
}

std::string resolve_output(const std::string& out, const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const fs::path p(out);
  if (p.is_absolute()) return p.string();
  const char* env_root = std::getenv("XIRL_OUT");
  const fs::path root = env_root != nullptr && *env_root != '\0' ? fs::path(env_root) : fs::path(config.output_root);
  return (root / p).lexically_normal().string();
}

}  // namespace xirl::app
