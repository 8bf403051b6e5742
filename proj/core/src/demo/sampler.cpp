#include "xirl/demo/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "xirl/common/errors.hpp"

namespace xirl::demo {

SamplerMode parse_sampler_mode(std::string_view name) {
  if (name == "uniform") return SamplerMode::kUniform;
  if (name == "contiguous") return SamplerMode::kContiguous;
  if (name == "evenly_spaced") return SamplerMode::kEvenlySpaced;
  throw ConfigError("unknown frame sampler '" + std::string(name) + "'");
}

std::string_view to_string(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::kUniform: return "uniform";
    case SamplerMode::kContiguous: return "contiguous";
    case SamplerMode::kEvenlySpaced: return "evenly_spaced";
  }
  return "uniform";
}

std::vector<int> sample_frames(int length, const FrameSamplerConfig& config, std::mt19937_64& rng) {
  const int n = config.frames;
  if (n < 1) throw ContractError("sample_frames: frames must be positive");
  if (n > length) {
    throw ContractError("sample_frames: " + std::to_string(n) + " frames requested from a video of length " +
                        std::to_string(length));
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  switch (config.mode) {
    case SamplerMode::kUniform: {
      std::vector<int> all(static_cast<std::size_t>(length));
      std::iota(all.begin(), all.end(), 0);
      std::sample(all.begin(), all.end(), std::back_inserter(out), n, rng);
      break;
    }
    case SamplerMode::kContiguous: {
      const int start = std::uniform_int_distribution<int>(0, length - n)(rng);
      for (int k = 0; k < n; ++k) out.push_back(start + k);
      break;
    }
    case SamplerMode::kEvenlySpaced: {
      if (n == 1) {
        out.push_back(0);
        break;
      }
      for (int k = 0; k < n; ++k) {
        out.push_back(static_cast<int>((static_cast<long long>(k) * (length - 1) * 2 + (n - 1)) / (2LL * (n - 1))));
      }
      break;
    }
  }
  return out;
}

}  // namespace xirl::demo
