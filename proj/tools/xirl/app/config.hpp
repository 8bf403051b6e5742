#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "xirl/env/embodiment.hpp"
#include "xirl/repr/train.hpp"
#include "xirl/reward/reward_model.hpp"
#include "xirl/rl/sac.hpp"

namespace xirl::app {

struct DemoConfig {
  int count = 200;
  std::uint64_t seed = 0;
  int grid_size = env::kDefaultGrid;
};

struct SuiteConfig {
  std::vector<env::Embodiment> held_out = {env::Embodiment::kLongstick};
  std::vector<std::uint64_t> policy_seeds = {0, 1, 2};
  int heldout_demos = 20;
};

/// Every module's settings in one document. Unknown keys anywhere are errors.
struct ExperimentConfig {
  std::string output_root = ".";
  DemoConfig demos;
  /// Sparse overrides applied on top of the chosen algorithm's defaults.
  nlohmann::json repr_overrides = nlohmann::json::object();
  reward::DistanceKind distance = reward::DistanceKind::kSquared;
  rl::SacConfig sac;
  SuiteConfig suite;
};

/// Parses a strict JSON config. Throws ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& text, const std::string& source);
ExperimentConfig load_config(const std::string& path);

/// Representation settings for `algorithm` with the config's overrides.
repr::ReprTrainConfig resolve_repr(const ExperimentConfig& config, repr::Algorithm algorithm);

/// Fully resolved document (defaults filled in), suitable for hashing.
nlohmann::json to_json(const ExperimentConfig& config, repr::Algorithm algorithm);

/// Output directory: absolute paths are kept; relative ones are placed under
/// $XIRL_OUT when set, else under the config's output root.
std::string resolve_output(const std::string& out, const ExperimentConfig& config);

}  // namespace xirl::app
