#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xirl/demo/demo.hpp"

namespace xirl::app {

/// Demos gathered from one or more `--demos` arguments. Each argument is a
/// dataset root (all embodiments) or `<root>/<embodiment>` (just that one).
struct VideoCollection {
  std::vector<demo::Demonstration> demos;
  std::vector<std::uint64_t> episode_seeds;  // parallel to demos
  std::vector<int> indices;                  // index within its embodiment
  std::vector<std::string> roots;            // dataset roots that were read

  [[nodiscard]] std::vector<env::Embodiment> embodiments() const;
  [[nodiscard]] std::vector<env::Embodiment> labels() const;
};

VideoCollection load_videos(const std::vector<std::string>& args, const std::vector<env::Embodiment>& only = {});

std::vector<env::Embodiment> parse_embodiment_list(const std::vector<std::string>& names);

}  // namespace xirl::app
