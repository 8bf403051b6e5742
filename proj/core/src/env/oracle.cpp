#include "xirl/env/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace xirl::env {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kUp = kPi / 2.0;
constexpr double kSweptMargin = 0.02;
constexpr double kAlignTolerance = 0.025;
constexpr double kTurnGain = 1.0 / (kMaxTurnRate * kControlDt);  // full correction in one step
constexpr double kStepLength = kMaxSpeed * kControlDt;
constexpr double kGripperCarryThrottle = 0.25;
constexpr double kGripperApproachThrottle = 0.3;
constexpr double kGripperReach = 0.11;

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

double steer(double error) { return std::clamp(error * kTurnGain, -1.0, 1.0); }

/// Throttle that does not overshoot `distance` in one control step.
double throttle_for(double distance) { return std::clamp(distance / kStepLength, 0.0, 1.0); }

/// Drives towards (px, py) choosing whichever of forward or reverse needs the
/// smaller turn, unless `forward_only` is set.
Action go_to(const EnvState& s, double px, double py, bool forward_only, double throttle_cap = 1.0) {
  const double dx = px - s.agent.x;
  const double dy = py - s.agent.y;
  const double dist = std::hypot(dx, dy);
  Action a;
  if (dist < 1e-4) return a;
  const double bearing = std::atan2(dy, dx);
  const double err_fwd = wrap(bearing - s.heading);
  const double err_rev = wrap(bearing + kPi - s.heading);
  const bool reverse = !forward_only && std::abs(err_rev) < std::abs(err_fwd);
  const double err = reverse ? err_rev : err_fwd;
  a.turn = steer(err);
  // Only translate once roughly facing the waypoint; the remaining error is
  // removed by the turn applied in the same step.
  const double gate = std::abs(err) < 0.35 ? std::cos(err) : 0.0;
  const double mag = std::min(throttle_cap, throttle_for(dist)) * gate;
  a.forward = reverse ? -mag : mag;
  return a;
}

std::vector<int> unswept_indices(const EnvState& s) {
  std::vector<int> out;
  for (int i = 0; i < kNumDebris; ++i) {
    if (is_unswept(s.debris[static_cast<std::size_t>(i)])) out.push_back(i);
  }
  return out;
}

int nearest_in_x(const EnvState& s, const std::vector<int>& candidates) {
  int best = candidates.front();
  double best_dx = std::numeric_limits<double>::infinity();
  for (int i : candidates) {
    const double dx = std::abs(s.debris[static_cast<std::size_t>(i)].x - s.agent.x);
    if (dx < best_dx) {
      best = i;
      best_dx = dx;
    }
  }
  return best;
}

// Demonstrators drive below full speed; the caps keep demos long enough to
// sample from without changing what the task requires.
double stick_throttle(Embodiment e) {
  switch (e) {
    case Embodiment::kLongstick: return 0.45;
    case Embodiment::kMediumstick: return 0.6;
    default: return 0.55;
  }
}

Action stick_policy(const EnvState& s) {
  const auto& sp = spec(s.embodiment);
  const double cap = stick_throttle(s.embodiment);
  const auto remaining = unswept_indices(s);
  if (remaining.empty()) return {};

  // Targets: the whole group for the longstick, otherwise the nearest debris
  // plus any neighbour that still fits on the blade.
  std::vector<int> targets;
  if (s.embodiment == Embodiment::kLongstick) {
    targets = remaining;
  } else {
    const int first = nearest_in_x(s, remaining);
    targets.push_back(first);
    const double fx = s.debris[static_cast<std::size_t>(first)].x;
    for (int i : remaining) {
      if (i != first && std::abs(s.debris[static_cast<std::size_t>(i)].x - fx) <= sp.width - 4.0 * kDebrisRadius) {
        targets.push_back(i);
      }
    }
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double target_y = lo;
  for (int i : targets) {
    lo = std::min(lo, s.debris[static_cast<std::size_t>(i)].x);
    hi = std::max(hi, s.debris[static_cast<std::size_t>(i)].x);
    target_y = std::min(target_y, s.debris[static_cast<std::size_t>(i)].y);
  }
  const double tx = (lo + hi) / 2.0;
  double lowest = std::numeric_limits<double>::infinity();
  for (int i : remaining) lowest = std::min(lowest, s.debris[static_cast<std::size_t>(i)].y);

  // Height at which the blade can turn and travel sideways without touching
  // any remaining debris.
  const double clear_y = std::max(0.02, lowest - kDebrisRadius - sp.width / 2.0 - 0.03);
  const double contact_y = target_y - kDebrisRadius - sp.depth / 2.0;
  const bool aligned = std::abs(s.agent.x - tx) < kAlignTolerance;
  const bool below = s.agent.y < contact_y + 0.01;

  if (aligned && below) {
    const double lateral = std::clamp(6.0 * (s.agent.x - tx), -0.3, 0.3);
    const double err = wrap(kUp + lateral - s.heading);
    Action a;
    a.turn = steer(err);
    const bool room_to_turn = s.agent.y <= clear_y + 0.01;
    if (std::abs(err) < 0.3) {
      a.forward = cap;
    } else if (!room_to_turn) {
      a.forward = -0.5;  // back off while straightening
    }
    return a;
  }
  if (s.agent.y > clear_y + 0.01) return go_to(s, s.agent.x, clear_y, false, cap);
  return go_to(s, tx, std::min(s.agent.y, clear_y), false, cap);
}

Action gripper_policy(const EnvState& s) {
  const auto remaining = unswept_indices(s);
  Action a;
  if (s.attached >= 0) {
    const auto& d = s.debris[static_cast<std::size_t>(s.attached)];
    if (d.y >= kZoneY + 3.0 * kSweptMargin) {
      a.grip = -1.0;
      return a;
    }
    a.grip = 1.0;
    const double err = wrap(kUp - s.heading);
    a.turn = steer(err);
    if (std::abs(err) < 0.35) a.forward = kGripperCarryThrottle * std::cos(err);
    return a;
  }
  if (remaining.empty()) return a;
  int target = remaining.front();
  double best = std::numeric_limits<double>::infinity();
  for (int i : remaining) {
    const auto& d = s.debris[static_cast<std::size_t>(i)];
    const double dist = std::hypot(d.x - s.agent.x, d.y - s.agent.y);
    if (dist < best) {
      best = dist;
      target = i;
    }
  }
  const auto& d = s.debris[static_cast<std::size_t>(target)];
  if (best <= kGripperReach) {
    a.grip = 1.0;
    return a;
  }
  // Stop just short of contact so the debris is not shoved away.
  const double stop = best - (spec(s.embodiment).radius + kDebrisRadius + 0.005);
  a = go_to(s, d.x, d.y, true, kGripperApproachThrottle);
  a.forward = std::min(a.forward, throttle_for(stop));
  a.grip = -1.0;
  return a;
}

}  // namespace

bool is_unswept(const Vec2& debris) { return debris.y < kZoneY + kSweptMargin; }

Action oracle_policy(const EnvState& state) {
  return spec(state.embodiment).shape == BodyShape::kDisk ? gripper_policy(state) : stick_policy(state);
}

}  // namespace xirl::env
