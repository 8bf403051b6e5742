#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "xirl/common/errors.hpp"
#include "xirl/env/oracle.hpp"
#include "xirl/env/render.hpp"
#include "xirl/env/sweep_env.hpp"

namespace xirl::env {
namespace {

constexpr double kPi = std::numbers::pi;

EnvState placed(Embodiment e, Vec2 agent, double heading, std::array<Vec2, kNumDebris> debris) {
  EnvState s = reset(e, 0);
  s.agent = agent;
  s.heading = heading;
  s.debris = debris;
  return s;
}

int run_oracle(Embodiment e, std::uint64_t seed, bool* success) {
  EnvState s = reset(e, seed);
  for (int t = 0; t < spec(e).horizon; ++t) {
    const auto r = step(s, oracle_policy(s));
    s = r.state;
    if (r.reward == 1.0) {
      *success = true;
      return t + 1;
    }
  }
  *success = false;
  return spec(e).horizon;
}

TEST(Embodiment, NamesRoundTrip) {
  for (auto e : kAllEmbodiments) EXPECT_EQ(parse_embodiment(name(e)), e);
  EXPECT_FALSE(parse_embodiment("tentacle").has_value());
  EXPECT_EQ(spec(Embodiment::kGripper).action_dim, 3);
  EXPECT_EQ(spec(Embodiment::kLongstick).horizon, 50);
}

TEST(Reset, DeterministicPerSeed) {
  for (auto e : kAllEmbodiments) {
    EXPECT_EQ(reset(e, 42), reset(e, 42));
    EXPECT_NE(reset(e, 42).debris, reset(e, 43).debris);
  }
}

TEST(Reset, AgentBelowDebrisAndDebrisShareY) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto e = kAllEmbodiments[seed % 4];
    const EnvState s = reset(e, seed);
    double min_y = 1.0;
    for (const auto& d : s.debris) {
      min_y = std::min(min_y, d.y);
      EXPECT_EQ(d.y, s.debris[0].y) << "seed " << seed;
      EXPECT_GE(d.x, kDebrisRadius);
      EXPECT_LE(d.x, 1.0 - kDebrisRadius);
    }
    EXPECT_LT(s.agent.y, min_y) << "seed " << seed;
    EXPECT_EQ(in_zone_fraction(s), 0.0);
    for (int i = 0; i < kNumDebris; ++i) EXPECT_EQ(body_penetration(s, i), 0.0);
  }
}

TEST(Step, ZeroActionIsAFixedPoint) {
  for (auto e : kAllEmbodiments) {
    const EnvState s = reset(e, 5);
    const auto r = step(s, Action{});
    EXPECT_EQ(r.state.agent, s.agent);
    EXPECT_EQ(r.state.heading, s.heading);
    EXPECT_EQ(r.state.debris, s.debris);
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_EQ(r.state.step, 1);
  }
}

TEST(Step, AllDebrisInZoneGivesFullReward) {
  const EnvState s = placed(Embodiment::kMediumstick, {0.5, 0.2}, kPi / 2, {{{0.2, 0.85}, {0.5, 0.9}, {0.8, 0.8}}});
  EXPECT_EQ(in_zone_fraction(s), 1.0);
  EXPECT_EQ(step(s, Action{}).reward, 1.0);
  const EnvState two = placed(Embodiment::kMediumstick, {0.5, 0.2}, kPi / 2, {{{0.2, 0.85}, {0.5, 0.5}, {0.8, 0.8}}});
  EXPECT_DOUBLE_EQ(in_zone_fraction(two), 2.0 / 3.0);
}

TEST(Step, PushingUpMovesDebrisUp) {
  for (auto e : {Embodiment::kLongstick, Embodiment::kShortstick, Embodiment::kGripper}) {
    const double reach = spec(e).shape == BodyShape::kDisk ? spec(e).radius : spec(e).depth / 2;
    const double y0 = 0.3 + reach + kDebrisRadius + 0.01;
    EnvState s = placed(e, {0.5, 0.3}, kPi / 2, {{{0.5, y0}, {0.1, 0.9}, {0.9, 0.9}}});
    for (int t = 0; t < 3; ++t) s = step(s, Action{1.0, 0.0, 0.0}).state;
    EXPECT_GT(s.debris[0].y, y0) << name(e);
    EXPECT_GT(s.agent.y, 0.3);
    EXPECT_NEAR(s.debris[0].x, 0.5, 1e-9);
  }
}

TEST(Step, MotionIsBoundedByMaxSpeed) {
  EnvState s = placed(Embodiment::kGripper, {0.5, 0.2}, 0.0, {{{0.1, 0.9}, {0.5, 0.9}, {0.9, 0.9}}});
  const auto r = step(s, Action{5.0, 0.0, 0.0});  // clamped to 1
  EXPECT_NEAR(r.state.agent.x - 0.5, kMaxSpeed * kControlDt, 1e-12);
  const auto turn = step(s, Action{0.0, 1.0, 0.0});
  EXPECT_NEAR(turn.state.heading, kMaxTurnRate * kControlDt, 1e-12);
}

TEST(Step, HorizonEndsEpisode) {
  EnvState s = reset(Embodiment::kLongstick, 1);
  StepResult r;
  for (int t = 0; t < 50; ++t) {
    r = step(s, Action{0.1, 0.0, 0.0});
    s = r.state;
    EXPECT_EQ(r.done, t == 49);
  }
  EXPECT_THROW(step(s, Action{}), ContractError);
}

TEST(Step, GripperCarriesGraspedDebris) {
  EnvState s = placed(Embodiment::kGripper, {0.5, 0.4}, kPi / 2, {{{0.5, 0.5}, {0.1, 0.9}, {0.9, 0.9}}});
  s = step(s, Action{0.0, 0.0, 1.0}).state;
  ASSERT_EQ(s.attached, 0);
  const double gap = s.debris[0].y - s.agent.y;
  for (int t = 0; t < 4; ++t) s = step(s, Action{1.0, 0.0, 1.0}).state;
  EXPECT_NEAR(s.debris[0].y - s.agent.y, gap, 1e-9);
  s = step(s, Action{0.0, 0.0, -1.0}).state;
  EXPECT_EQ(s.attached, -1);
  // Sticks never grasp.
  EnvState st = placed(Embodiment::kShortstick, {0.5, 0.4}, kPi / 2, {{{0.5, 0.5}, {0.1, 0.9}, {0.9, 0.9}}});
  EXPECT_EQ(step(st, Action{0.0, 0.0, 1.0}).state.attached, -1);
}

TEST(Render, ZoneChannelIsStatic) {
  for (std::uint64_t seed : {0u, 9u}) {
    const Grid g = render(reset(Embodiment::kGripper, seed), 32);
    for (int row = 0; row < 32; ++row) {
      const double y = 1.0 - (row + 0.5) / 32.0;
      for (int col = 0; col < 32; ++col) EXPECT_EQ(g.at(row, col, 2), y >= kZoneY ? 1 : 0);
    }
  }
}

TEST(Render, AreasMatchGeometry) {
  const int G = 64;
  for (auto e : kAllEmbodiments) {
    const EnvState s = placed(e, {0.5, 0.3}, 0.4, {{{0.2, 0.6}, {0.5, 0.6}, {0.8, 0.6}}});
    const Grid g = render(s, G);
    int agent = 0, debris = 0;
    for (int r = 0; r < G; ++r) {
      for (int c = 0; c < G; ++c) {
        agent += g.at(r, c, 0);
        debris += g.at(r, c, 1);
      }
    }
    const auto& sp = spec(e);
    const double agent_area = sp.shape == BodyShape::kDisk ? kPi * sp.radius * sp.radius : sp.width * sp.depth;
    EXPECT_NEAR(agent, agent_area * G * G, 2.0 * G) << name(e);
    EXPECT_NEAR(debris, 3 * kPi * kDebrisRadius * kDebrisRadius * G * G, 2.0 * G);
  }
}

TEST(Render, DeterministicAndValidated) {
  const EnvState s = reset(Embodiment::kShortstick, 3);
  EXPECT_EQ(render(s), render(s));
  EXPECT_EQ(render(s).cells.size(), 64u * 64u * 3u);
  EXPECT_THROW(render(s, 8), ContractError);
}

TEST(Render, TopRowIsHighY) {
  const EnvState s = placed(Embodiment::kGripper, {0.5, 0.1}, 0.0, {{{0.5, 0.9}, {0.1, 0.9}, {0.9, 0.9}}});
  const Grid g = render(s, 20);
  EXPECT_EQ(g.at(2, 10, 1), 1);   // y = 0.875
  EXPECT_EQ(g.at(18, 10, 0), 1);  // y = 0.075
}

TEST(StateVector, HeadingZero) {
  const EnvState s = placed(Embodiment::kLongstick, {0.5, 0.1}, 0.0, {{{0.2, 0.9}, {0.5, 0.5}, {0.8, 0.7}}});
  const auto v = state_vector(s);
  EXPECT_EQ(v[0], 0.5);
  EXPECT_EQ(v[1], 0.1);
  EXPECT_EQ(v[2], 1.0);
  EXPECT_EQ(v[3], 0.0);
  EXPECT_EQ(v[7], 0.0);  // first debris already inside the zone
}

TEST(StateVector, MatchesScalarRecomputation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EnvState s = reset(kAllEmbodiments[seed % 4], seed);
    s.heading = 0.37 * static_cast<double>(seed);
    const auto v = state_vector(s);
    EXPECT_NEAR(v[2], std::cos(s.heading), 1e-15);
    EXPECT_NEAR(v[3], std::sin(s.heading), 1e-15);
    for (int i = 0; i < 3; ++i) {
      const auto& d = s.debris[static_cast<std::size_t>(i)];
      const double dx = d.x - s.agent.x, dy = d.y - s.agent.y;
      EXPECT_NEAR(v[4 + 4 * i + 2], std::sqrt(dx * dx + dy * dy), 1e-15);
      EXPECT_NEAR(v[4 + 4 * i + 3], d.y >= 0.8 ? 0.0 : 0.8 - d.y, 1e-15);
    }
  }
}

TEST(FrameStacker, FillsThenShifts) {
  std::array<double, kStateDim> a{}, b{}, c{};
  a.fill(1);
  b.fill(2);
  c.fill(3);
  FrameStacker st;
  st.reset(a);
  auto s = st.stacked();
  EXPECT_EQ(s[0], 1);
  EXPECT_EQ(s[47], 1);
  st.push(b);
  st.push(c);
  s = st.stacked();
  EXPECT_EQ(s[0], 1);
  EXPECT_EQ(s[16], 2);
  EXPECT_EQ(s[32], 3);
  st.push(c);
  EXPECT_EQ(st.stacked()[0], 2);
}

TEST(Oracle, IdleWhenDone) {
  for (auto e : kAllEmbodiments) {
    const EnvState s = placed(e, {0.5, 0.2}, kPi / 2, {{{0.2, 0.9}, {0.5, 0.9}, {0.8, 0.9}}});
    const Action a = oracle_policy(s);
    EXPECT_LT(std::abs(a.forward), 1e-6);
    EXPECT_LT(std::abs(a.turn), 1e-6);
  }
}

TEST(Oracle, SolvesNearlyEveryEpisode) {
  for (auto e : kAllEmbodiments) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      bool success = false;
      run_oracle(e, seed, &success);
      ok += success;
    }
    EXPECT_GE(ok, 190) << name(e);
  }
}

TEST(Oracle, LongstickFasterThanGripper) {
  double longstick = 0, gripper = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    bool s = false;
    longstick += run_oracle(Embodiment::kLongstick, seed, &s);
    gripper += run_oracle(Embodiment::kGripper, seed, &s);
  }
  EXPECT_LT(longstick, gripper);
}

}  // namespace
}  // namespace xirl::env
