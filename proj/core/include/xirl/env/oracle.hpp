#pragma once

#include "xirl/env/sweep_env.hpp"

namespace xirl::env {

/// Scripted demonstrator. Stateless: the phase is read off the geometry.
/// Sticks reposition below their target and push it up; the gripper grasps,
/// carries and releases one debris at a time.
Action oracle_policy(const EnvState& state);

/// Debris whose centre is still below the zone boundary plus a small margin.
bool is_unswept(const Vec2& debris);

}  // namespace xirl::env
