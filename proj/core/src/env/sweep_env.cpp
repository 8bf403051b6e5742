#include "xirl/env/sweep_env.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xirl/common/errors.hpp"

namespace xirl::env {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kOverlapSlack = 1e-9;

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }
Vec2 forward_dir(double heading) { return {std::cos(heading), std::sin(heading)}; }
Vec2 left_dir(double heading) { return {-std::sin(heading), std::cos(heading)}; }
Vec2 clamp_unit(Vec2 p, double margin) {
  return {std::clamp(p.x, margin, 1.0 - margin), std::clamp(p.y, margin, 1.0 - margin)};
}

/// Minimal translation moving a debris disk out of the agent body; zero when separate.
Vec2 body_mtv(const EnvState& s, Vec2 debris) {
  const auto& sp = spec(s.embodiment);
  const Vec2 d = debris - s.agent;
  const Vec2 h = forward_dir(s.heading);
  if (sp.shape == BodyShape::kDisk) {
    const double dist = norm(d);
    const double pen = sp.radius + kDebrisRadius - dist;
    if (pen <= 0.0) return {};
    const Vec2 dir = dist > 1e-12 ? (1.0 / dist) * d : h;
    return pen * dir;
  }
  const Vec2 n = left_dir(s.heading);
  const double u = dot(d, h);
  const double w = dot(d, n);
  const double hu = sp.depth / 2.0;
  const double hw = sp.width / 2.0;
  const double cu = std::clamp(u, -hu, hu);
  const double cw = std::clamp(w, -hw, hw);
  const double du = u - cu;
  const double dw = w - cw;
  const double dist = std::hypot(du, dw);
  if (dist > 1e-12) {
    const double pen = kDebrisRadius - dist;
    if (pen <= 0.0) return {};
    return (pen / dist) * (du * h + dw * n);
  }
  // Centre inside the rectangle: leave through the nearest face.
  const double pen_u = hu - std::abs(u) + kDebrisRadius;
  const double pen_w = hw - std::abs(w) + kDebrisRadius;
  if (pen_u <= pen_w) return (u >= 0.0 ? pen_u : -pen_u) * h;
  return (w >= 0.0 ? pen_w : -pen_w) * n;
}

Vec2 attached_position(const EnvState& s) {
  return s.agent + s.attach_offset.x * forward_dir(s.heading) + s.attach_offset.y * left_dir(s.heading);
}

bool any_body_overlap(const EnvState& s) {
  for (int i = 0; i < kNumDebris; ++i) {
    if (i != s.attached && body_penetration(s, i) > kOverlapSlack) return true;
  }
  return false;
}

/// Moves the agent by one substep and resolves contacts. Returns false (and
/// leaves `s` untouched) when the motion is blocked.
bool substep(EnvState& s, double forward, double turn) {
  EnvState t = s;
  const double dt = kControlDt / kSubsteps;
  t.heading = s.heading + turn * kMaxTurnRate * dt;
  t.agent = clamp_unit(s.agent + (forward * kMaxSpeed * dt) * forward_dir(t.heading), 0.0);

  if (t.attached >= 0) {
    const Vec2 carried = attached_position(t);
    if (carried.x < kDebrisRadius || carried.x > 1.0 - kDebrisRadius || carried.y < kDebrisRadius ||
        carried.y > 1.0 - kDebrisRadius) {
      return false;
    }
    t.debris[static_cast<std::size_t>(t.attached)] = carried;
  }

  for (int iter = 0; iter < kSeparationIterations; ++iter) {
    for (int i = 0; i < kNumDebris; ++i) {
      if (i == t.attached) continue;
      auto& d = t.debris[static_cast<std::size_t>(i)];
      d = d + body_mtv(t, d);
    }
    for (int i = 0; i < kNumDebris; ++i) {
      for (int j = i + 1; j < kNumDebris; ++j) {
        auto& a = t.debris[static_cast<std::size_t>(i)];
        auto& b = t.debris[static_cast<std::size_t>(j)];
        const Vec2 diff = b - a;
        const double dist = norm(diff);
        const double pen = 2.0 * kDebrisRadius - dist;
        if (pen <= 0.0) continue;
        const Vec2 dir = dist > 1e-12 ? (1.0 / dist) * diff : Vec2{1.0, 0.0};
        if (i == t.attached) {
          b = b + pen * dir;
        } else if (j == t.attached) {
          a = a - pen * dir;
        } else {
          a = a - (pen / 2.0) * dir;
          b = b + (pen / 2.0) * dir;
        }
      }
    }
    for (int i = 0; i < kNumDebris; ++i) {
      if (i == t.attached) continue;
      auto& d = t.debris[static_cast<std::size_t>(i)];
      d = clamp_unit(d, kDebrisRadius);
    }
  }

  if (any_body_overlap(t)) return false;
  s = t;
  return true;
}

}  // namespace

double body_penetration(const EnvState& state, int i) {
  const Vec2 mtv = body_mtv(state, state.debris.at(static_cast<std::size_t>(i)));
  return norm(mtv);
}

EnvState reset(Embodiment embodiment, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> debris_y(0.45, 0.60);
  std::uniform_real_distribution<double> debris_x(0.25, 0.75);
  std::uniform_real_distribution<double> agent_x(0.20, 0.80);
  std::uniform_real_distribution<double> agent_y(0.05, 0.30);
  std::uniform_real_distribution<double> heading(kPi / 2.0 - kPi / 6.0, kPi / 2.0 + kPi / 6.0);

  EnvState s;
  s.embodiment = embodiment;
  s.seed = seed;
  const double y = debris_y(rng);
  std::array<double, kNumDebris> xs{};
  while (true) {
    for (auto& x : xs) x = debris_x(rng);
    std::sort(xs.begin(), xs.end());
    if (xs[1] - xs[0] >= 0.12 && xs[2] - xs[1] >= 0.12) break;
  }
  // Left-to-right order would leak into the state layout; shuffle it away.
  std::shuffle(xs.begin(), xs.end(), rng);
  for (int i = 0; i < kNumDebris; ++i) s.debris[static_cast<std::size_t>(i)] = {xs[static_cast<std::size_t>(i)], y};
  do {
    s.agent = {agent_x(rng), agent_y(rng)};
    s.heading = heading(rng);
  } while (any_body_overlap(s));
  return s;
}

StepResult step(const EnvState& state, const Action& action) {
  const auto& sp = spec(state.embodiment);
  if (state.step >= sp.horizon) throw ContractError("step: episode already finished");
  const double forward = std::clamp(action.forward, -1.0, 1.0);
  const double turn = std::clamp(action.turn, -1.0, 1.0);
  const double grip = std::clamp(action.grip, -1.0, 1.0);

  EnvState s = state;
  if (sp.shape == BodyShape::kDisk) {
    if (grip <= 0.0) {
      s.grasping = false;
      s.attached = -1;
      s.attach_offset = {};
    } else if (!s.grasping) {
      int best = -1;
      double best_dist = sp.grasp_radius + kDebrisRadius;
      for (int i = 0; i < kNumDebris; ++i) {
        const double dist = norm(s.debris[static_cast<std::size_t>(i)] - s.agent);
        if (dist <= best_dist) {
          best = i;
          best_dist = dist;
        }
      }
      if (best >= 0) {
        const Vec2 d = s.debris[static_cast<std::size_t>(best)] - s.agent;
        s.grasping = true;
        s.attached = best;
        s.attach_offset = {dot(d, forward_dir(s.heading)), dot(d, left_dir(s.heading))};
      }
    }
  }

  if (forward != 0.0 || turn != 0.0) {
    for (int k = 0; k < kSubsteps; ++k) substep(s, forward, turn);
  }
  s.step += 1;
  return {s, in_zone_fraction(s), s.step >= sp.horizon};
}

double in_zone_fraction(const EnvState& state) {
  int count = 0;
  for (const auto& d : state.debris) count += d.y >= kZoneY ? 1 : 0;
  return static_cast<double>(count) / kNumDebris;
}

std::array<double, kStateDim> state_vector(const EnvState& state) {
  std::array<double, kStateDim> v{};
  v[0] = state.agent.x;
  v[1] = state.agent.y;
  v[2] = std::cos(state.heading);
  v[3] = std::sin(state.heading);
  for (int i = 0; i < kNumDebris; ++i) {
    const auto& d = state.debris[static_cast<std::size_t>(i)];
    const std::size_t o = 4 + 4 * static_cast<std::size_t>(i);
    v[o] = d.x;
    v[o + 1] = d.y;
    v[o + 2] = std::hypot(d.x - state.agent.x, d.y - state.agent.y);
    v[o + 3] = std::max(0.0, kZoneY - d.y);
  }
  return v;
}

void FrameStacker::reset(const std::array<double, kStateDim>& first) {
  frames_.assign(kStackDepth, first);
}

void FrameStacker::push(const std::array<double, kStateDim>& next) {
  if (frames_.empty()) {
    reset(next);
    return;
  }
  frames_.pop_front();
  frames_.push_back(next);
}

std::array<double, kStackedStateDim> FrameStacker::stacked() const {
  if (frames_.size() != kStackDepth) throw ContractError("FrameStacker: not reset");
  std::array<double, kStackedStateDim> out{};
  for (std::size_t f = 0; f < kStackDepth; ++f) {
    std::copy(frames_[f].begin(), frames_[f].end(), out.begin() + static_cast<std::ptrdiff_t>(f * kStateDim));
  }
  return out;
}

}  // namespace xirl::env
