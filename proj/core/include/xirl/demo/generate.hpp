#pragma once

#include <cstdint>

#include "xirl/demo/demo.hpp"

namespace xirl::demo {

struct GenerateOptions {
  int grid_size = env::kDefaultGrid;
  int failure_window = 20;  // attempts inspected by the failure-rate guard
};

/// Seed of the `attempt`-th episode drawn from a base seed.
std::uint64_t episode_seed(std::uint64_t base_seed, int attempt);

/// Rolls out the scripted oracle from `reset(embodiment, seed)` until the
/// first fully swept frame or the horizon.
Demonstration record_episode(env::Embodiment embodiment, std::uint64_t seed, int grid_size);

/// Collects `count` successful demos. Failed attempts are dropped and the
/// seed stream moves on. Throws NumericError when more than half of the
/// latest `failure_window` attempts failed.
DemoSet generate_demos(env::Embodiment embodiment, int count, std::uint64_t seed,
                       const GenerateOptions& options = {});

/// Concatenates sets generated at the same grid size.
DemoSet merge(const std::vector<DemoSet>& sets);

}  // namespace xirl::demo
