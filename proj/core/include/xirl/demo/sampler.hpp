#pragma once

#include <random>
#include <string_view>
#include <vector>

namespace xirl::demo {

enum class SamplerMode { kUniform, kContiguous, kEvenlySpaced };

struct FrameSamplerConfig {
  SamplerMode mode = SamplerMode::kUniform;
  int frames = 40;
};

SamplerMode parse_sampler_mode(std::string_view name);
std::string_view to_string(SamplerMode mode);

/// Sorted, distinct frame indices in [0, length). Uniform draws without
/// replacement; contiguous picks a random start; evenly spaced is fixed.
/// Throws ContractError when frames < 1 or frames > length.
std::vector<int> sample_frames(int length, const FrameSamplerConfig& config, std::mt19937_64& rng);

}  // namespace xirl::demo
