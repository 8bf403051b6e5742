#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace xirl::env {

enum class Embodiment : std::uint8_t { kLongstick = 0, kMediumstick = 1, kShortstick = 2, kGripper = 3 };

inline constexpr std::array<Embodiment, 4> kAllEmbodiments = {
    Embodiment::kLongstick, Embodiment::kMediumstick, Embodiment::kShortstick, Embodiment::kGripper};

enum class BodyShape : std::uint8_t { kStick, kDisk };

/// Geometry and control limits of one agent. Sticks are rectangles whose long
/// side is perpendicular to the heading (a push bar); the gripper is a disk.
struct EmbodimentSpec {
  Embodiment id;
  BodyShape shape;
  double width;         // stick length across the heading
  double depth;         // stick thickness along the heading
  double radius;        // gripper body radius
  double grasp_radius;  // gripper reach, measured from the body centre to the debris edge
  int action_dim;
  int horizon;
};

const EmbodimentSpec& spec(Embodiment e);

std::string_view name(Embodiment e);
std::optional<Embodiment> parse_embodiment(std::string_view name);

}  // namespace xirl::env
