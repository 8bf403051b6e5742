#include "xirl/env/embodiment.hpp"

namespace xirl::env {
namespace {

constexpr std::array<EmbodimentSpec, 4> kSpecs = {{
    {Embodiment::kLongstick, BodyShape::kStick, 0.50, 0.04, 0.0, 0.0, 2, 50},
    {Embodiment::kMediumstick, BodyShape::kStick, 0.30, 0.04, 0.0, 0.0, 2, 100},
    {Embodiment::kShortstick, BodyShape::kStick, 0.15, 0.04, 0.0, 0.0, 2, 100},
    {Embodiment::kGripper, BodyShape::kDisk, 0.0, 0.0, 0.06, 0.08, 3, 100},
}};

constexpr std::array<std::string_view, 4> kNames = {"longstick", "mediumstick", "shortstick", "gripper"};

}  // namespace

const EmbodimentSpec& spec(Embodiment e) { return kSpecs[static_cast<std::size_t>(e)]; }

std::string_view name(Embodiment e) { return kNames[static_cast<std::size_t>(e)]; }

std::optional<Embodiment> parse_embodiment(std::string_view n) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == n) return static_cast<Embodiment>(i);
  }
  return std::nullopt;
}

}  // namespace xirl::env
