#include <algorithm>
#include <array>
#include <cmath>

#include "asp/env.hpp"
#include "asp/errors.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace asp;
using testing::MakeState;

namespace {

Action Act(Move m, VerticalGrip g = VerticalGrip::kNone,
           Rotate r = Rotate::kNone) {
  return Action{m, g, r};
}

}  // namespace

TEST_CASE("reset is deterministic and places objects on distinct cells") {
  GridTableEnv a(GridConfig{}), b(GridConfig{});
  const WorldState s1 = a.Reset(7, 2);
  const WorldState s2 = b.Reset(7, 2);
  CHECK(s1 == s2);
  CHECK(SerializeState(s1) == SerializeState(s2));
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const WorldState& s = a.Reset(seed, 2);
    CHECK(s.objects[0].level == 0);
    CHECK(s.objects[1].level == 0);
    CHECK_FALSE((s.objects[0].x == s.objects[1].x &&
                 s.objects[0].y == s.objects[1].y));
    CHECK(s.gripper.z == 1);
    CHECK_FALSE(s.gripper.holding.has_value());
    ValidateState(a.config(), s);
  }
}

TEST_CASE("reset cell frequencies are uniform over the placement area") {
  GridTableEnv env(GridConfig{});
  std::array<int, 25> counts{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const WorldState& s = env.Reset(1000 + i, 1);
    ++counts[s.objects[0].y * 5 + s.objects[0].x];
  }
  // At 10k draws one cell's count has sd ~4.9% of its mean, so the per-cell
  // band is 4 sd; the chi-square bound is the 99.9% quantile for 24 dof.
  double chi2 = 0.0;
  const double expected = n / 25.0;
  const double sd = std::sqrt(n * (1.0 / 25) * (24.0 / 25));
  for (int c : counts) {
    chi2 += (c - expected) * (c - expected) / expected;
    CHECK(std::abs(c - expected) < 4 * sd);
  }
  CHECK(chi2 < 51.18);
}

TEST_CASE("reset rejects more objects than placement cells") {
  GridConfig c;
  c.placement_area = {0, 0, 1, 1};
  GridTableEnv env(c);
  CHECK_THROWS_AS(env.Reset(1, 2), ConfigError);
  CHECK_THROWS_AS(env.Reset(1, 0), ConfigError);
}

TEST_CASE("grid config validation") {
  GridConfig c;
  c.width = 2;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = GridConfig{};
  c.placement_area = {3, 3, 3, 3};
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = GridConfig{};
  c.max_objects = 0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
}

TEST_CASE("reset_to round-trips and rejects floating objects") {
  GridTableEnv env(GridConfig{});
  const WorldState s = MakeState(1, 1, 0, {{2, 2, 0, 1}, {2, 2, 1, 3}});
  CHECK(env.ResetTo(s) == s);
  const WorldState after = env.Step(Act(Move::kStay));
  CHECK(after.step_count == 1);

  const WorldState floating = MakeState(0, 0, 1, {{3, 3, 2, 0}});
  CHECK_THROWS_AS(env.ResetTo(floating), ValidationError);
  const WorldState overlap = MakeState(0, 0, 1, {{3, 3, 0, 0}, {3, 3, 0, 1}});
  CHECK_THROWS_AS(env.ResetTo(overlap), ValidationError);
  const WorldState held_away =
      MakeState(0, 0, 1, {{3, 3, 1, 0}}, std::optional<int>(0));
  CHECK_THROWS_AS(env.ResetTo(held_away), ValidationError);
}

TEST_CASE("held object follows the gripper") {
  GridConfig c;
  const WorldState s =
      MakeState(2, 2, 1, {{2, 2, 1, 0}}, std::optional<int>(0));
  const WorldState n = Step(c, s, Act(Move::kEast));
  CHECK(n.gripper.x == 3);
  CHECK(n.objects[0].x == 3);
  CHECK(n.objects[0].y == 2);
}

TEST_CASE("moves clamp at the grid edge") {
  GridConfig c;
  const WorldState s = MakeState(0, 4, 1, {{2, 2, 0, 0}});
  CHECK(Step(c, s, Act(Move::kWest)).gripper.x == 0);
  CHECK(Step(c, s, Act(Move::kNorth)).gripper.y == 4);
  CHECK(Step(c, s, Act(Move::kSouth)).gripper.y == 3);
}

TEST_CASE("release onto a stack and regrasp the top") {
  GridConfig c;
  // obj1 held above a cell that already holds obj0.
  WorldState s = MakeState(1, 1, 0, {{1, 1, 0, 0}, {1, 1, 0, 2}},
                           std::optional<int>(1));
  s = Step(c, s, Act(Move::kStay, VerticalGrip::kToggleGrip));
  CHECK_FALSE(s.gripper.holding.has_value());
  CHECK(s.objects[1].level == 1);
  ValidateState(c, s);
  s = Step(c, s, Act(Move::kStay, VerticalGrip::kToggleGrip));
  REQUIRE(s.gripper.holding.has_value());
  CHECK(*s.gripper.holding == 1);

  const auto ref = oracle::Apply(
      testing::ToOracle(c),
      oracle::Apply(testing::ToOracle(c),
                    testing::ToOracle(MakeState(1, 1, 0,
                                                {{1, 1, 0, 0}, {1, 1, 0, 2}},
                                                std::optional<int>(1))),
                    {4, 2, 2}),
      {4, 2, 2});
  CHECK(oracle::Canonical(ref) == SerializeState(s));
}

TEST_CASE("release on a full stack is a no-op") {
  GridConfig c;
  c.max_stack_height = 1;
  WorldState s = MakeState(1, 1, 0, {{1, 1, 0, 0}, {1, 1, 0, 2}},
                           std::optional<int>(1));
  const WorldState n = Step(c, s, Act(Move::kStay, VerticalGrip::kToggleGrip));
  CHECK(n.gripper.holding == std::optional<int>(1));
}

TEST_CASE("grasp needs a lowered gripper over an object") {
  GridConfig c;
  WorldState s = MakeState(1, 1, 1, {{1, 1, 0, 0}});
  CHECK_FALSE(Step(c, s, Act(Move::kStay, VerticalGrip::kToggleGrip))
                  .gripper.holding.has_value());
  s.gripper.z = 0;
  CHECK(Step(c, s, Act(Move::kStay, VerticalGrip::kToggleGrip))
            .gripper.holding == std::optional<int>(0));
  s.gripper.x = 2;
  CHECK_FALSE(Step(c, s, Act(Move::kStay, VerticalGrip::kToggleGrip))
                  .gripper.holding.has_value());
}

TEST_CASE("rotation applies only to a held object") {
  GridConfig c;
  WorldState s = MakeState(1, 1, 1, {{1, 1, 0, 0}});
  CHECK(Step(c, s, Act(Move::kStay, VerticalGrip::kNone, Rotate::kCcw))
            .objects[0]
            .orientation == 0);
  s = MakeState(1, 1, 1, {{1, 1, 1, 0}}, std::optional<int>(0));
  CHECK(Step(c, s, Act(Move::kStay, VerticalGrip::kNone, Rotate::kCcw))
            .objects[0]
            .orientation == 1);
  CHECK(Step(c, s, Act(Move::kStay, VerticalGrip::kNone, Rotate::kCw))
            .objects[0]
            .orientation == 3);
}

TEST_CASE("action indices round-trip over all 60 actions") {
  for (int i = 0; i < kNumActions; ++i) {
    const Action a = Action::FromIndex(i);
    CHECK(a.Index() == i);
    CHECK(Action::FromFactorIndices(a.FactorIndices()) == a);
  }
  CHECK_THROWS_AS(Action::FromIndex(60), ValidationError);
  CHECK_THROWS_AS(Action::FromFactorIndices({5, 0, 0}), ValidationError);
  CHECK(ToString(Action{}) == "stay/none/none");
}

TEST_CASE("random action sequences stay valid and match the reference rules") {
  GridConfig c;
  c.max_objects = 3;
  c.max_stack_height = 2;
  const oracle::Grid og = testing::ToOracle(c);
  for (int episode = 0; episode < 40; ++episode) {
    Rng rng = MakeRng(DeriveSeed(99, episode));
    const int n = 1 + episode % 3;
    WorldState s = SampleInitialState(c, n, rng);
    oracle::State ref = testing::ToOracle(s);
    for (int t = 0; t < 500; ++t) {
      const Action a = Action::FromIndex(UniformInt(rng, kNumActions));
      const WorldState next = Step(c, s, a);
      CHECK(next == Step(c, s, a));
      REQUIRE_NOTHROW(ValidateState(c, next));
      CHECK(next.NumObjects() == n);
      const auto idx = a.FactorIndices();
      ref = oracle::Apply(og, ref, {idx[0], idx[1], idx[2]});
      REQUIRE(oracle::Canonical(ref) == SerializeState(next));
      s = next;
    }
  }
}

TEST_CASE("serialized state round-trips") {
  GridTableEnv env(GridConfig{});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const WorldState s = env.Reset(seed, 2);
    CHECK(ParseState(SerializeState(s)) == s);
    CHECK(env.ResetTo(ParseState(SerializeState(s))) == s);
  }
  const WorldState held =
      MakeState(3, 1, 1, {{3, 1, 1, 2}, {0, 0, 0, 0}}, std::optional<int>(0));
  CHECK(ParseState(SerializeState(held)) == held);
  CHECK(SerializeState(held) == "ws1 step=0 grip=3,1,1,0 obj=3,1,1,2;0,0,0,0");
  CHECK_THROWS_AS(ParseState("ws2 step=0 grip=0,0,1,-1 obj=0,0,0,0"),
                  FormatError);
  CHECK_THROWS_AS(ParseState("ws1 step=x grip=0,0,1,-1 obj=0,0,0,0"),
                  FormatError);
  CHECK_THROWS_AS(ParseState("ws1 step=0 grip=0,0,1 obj=0,0,0,0"), FormatError);
}
