#pragma once

#include <array>
#include <cstdint>
#include <deque>

#include "xirl/env/embodiment.hpp"

namespace xirl::env {

inline constexpr double kControlDt = 1.0 / 8.0;
inline constexpr double kMaxSpeed = 0.8;           // workspace units per second
inline constexpr double kMaxTurnRate = 3.14159265358979323846;  // rad per second
inline constexpr double kDebrisRadius = 0.04;
inline constexpr double kZoneY = 0.8;               // goal zone is y >= kZoneY
inline constexpr int kNumDebris = 3;
inline constexpr int kSubsteps = 4;
inline constexpr int kSeparationIterations = 4;
inline constexpr std::size_t kStateDim = 16;
inline constexpr std::size_t kStackDepth = 3;
inline constexpr std::size_t kStackedStateDim = kStateDim * kStackDepth;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

/// Full simulator state. Positions live in the unit square.
struct EnvState {
  Embodiment embodiment = Embodiment::kLongstick;
  Vec2 agent;
  double heading = 0.0;
  bool grasping = false;
  int attached = -1;    // index of the carried debris, gripper only
  Vec2 attach_offset;   // carried debris position in the agent frame
  std::array<Vec2, kNumDebris> debris{};
  int step = 0;
  std::uint64_t seed = 0;

  bool operator==(const EnvState&) const = default;
};

/// Normalised controls; each component is clamped to [-1, 1] before use.
struct Action {
  double forward = 0.0;
  double turn = 0.0;
  double grip = 0.0;  // ignored by stick embodiments
};

struct StepResult {
  EnvState state;
  double reward = 0.0;  // fraction of debris inside the goal zone
  bool done = false;    // horizon reached
};

EnvState reset(Embodiment embodiment, std::uint64_t seed);

/// Advances one 8 Hz control step. Throws ContractError once the horizon is reached.
StepResult step(const EnvState& state, const Action& action);

/// Number of debris with centre y >= kZoneY, divided by kNumDebris.
double in_zone_fraction(const EnvState& state);

/// Penetration depth of debris `i` into the agent body (0 when separate).
double body_penetration(const EnvState& state, int i);

/// Agent (x, y), (cos, sin) of heading, then per debris (x, y, distance to
/// agent, distance to goal zone).
std::array<double, kStateDim> state_vector(const EnvState& state);

/// Keeps the last kStackDepth state vectors, oldest first. The first vector
/// pushed after `reset` fills every slot.
class FrameStacker {
 public:
  void reset(const std::array<double, kStateDim>& first);
  void push(const std::array<double, kStateDim>& next);
  [[nodiscard]] std::array<double, kStackedStateDim> stacked() const;

 private:
  std::deque<std::array<double, kStateDim>> frames_;
};

}  // namespace xirl::env
