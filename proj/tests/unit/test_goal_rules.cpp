#include <cmath>
#include <numbers>
#include <set>

#include "asp/errors.hpp"
#include "asp/goal_rules.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace asp;
using testing::MakeState;

TEST_CASE("object at goal uses both thresholds and the level") {
  const GoalMatcher m;
  const ObjectPose target{2, 2, 0, 1, false};
  CHECK(m.ObjectAtGoal(target, target));
  CHECK_FALSE(m.ObjectAtGoal({3, 2, 0, 1, false}, target));
  CHECK_FALSE(m.ObjectAtGoal({2, 2, 0, 2, false}, target));
  CHECK_FALSE(m.ObjectAtGoal({2, 2, 1, 1, false}, target));
  CHECK_FALSE(m.ObjectAtGoal({2, 2, 0, 1, true}, target));
  // Diagonal neighbour: 0.0707 m.
  CHECK_FALSE(m.ObjectAtGoal({3, 3, 0, 1, false}, target));
}

TEST_CASE("rotation distance is the minimal angle") {
  CHECK(RotationDistance(0, 0) == 0.0);
  CHECK(RotationDistance(0, 1) == doctest::Approx(std::numbers::pi / 2));
  CHECK(RotationDistance(0, 3) == doctest::Approx(std::numbers::pi / 2));
  CHECK(RotationDistance(1, 3) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("relaxed rotation weight ignores quarter turns below threshold") {
  GoalMatcher m;
  m.rotation_weight = 0.1;
  CHECK(m.ObjectAtGoal({1, 1, 0, 1, false}, {1, 1, 0, 0, false}));
  m.rotation_weight = 0.2;
  CHECK_FALSE(m.ObjectAtGoal({1, 1, 0, 1, false}, {1, 1, 0, 0, false}));
}

TEST_CASE("goal achieved needs every object") {
  const GoalMatcher m;
  const WorldState s = MakeState(0, 0, 1, {{1, 1, 0, 0}, {3, 3, 0, 2}});
  Goal g = GoalFromState(s);
  CHECK(m.GoalAchieved(s, g));
  g.targets[1].x = 4;
  CHECK_FALSE(m.GoalAchieved(s, g));
  Goal short_goal;
  short_goal.targets = {g.targets[0]};
  CHECK_THROWS_AS(m.GoalAchieved(s, short_goal), ValidationError);
}

TEST_CASE("exactly one placement satisfies a goal on a 3x3 grid") {
  GridConfig c;
  c.width = c.height = 3;
  c.placement_area = {0, 0, 3, 3};
  const GoalMatcher m;
  const Goal g = GoalFromState(MakeState(0, 0, 1, {{1, 2, 0, 3}}));
  int hits = 0;
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 3; ++y) {
      for (int r = 0; r < 4; ++r) {
        const WorldState s = MakeState(0, 0, 1, {{x, y, 0, r}});
        const bool ours = m.GoalAchieved(s, g);
        CHECK(ours == oracle::Achieved(testing::ToOracle(s),
                                       testing::ToOracle(g)));
        hits += ours;
      }
    }
  }
  CHECK(hits == 1);
}

TEST_CASE("in-air target needs the object held by a raised gripper") {
  const GoalMatcher m;
  const WorldState lifted =
      MakeState(2, 2, 1, {{2, 2, 1, 0}}, std::optional<int>(0));
  const Goal g = GoalFromState(lifted);
  CHECK(g.targets[0].in_air);
  CHECK(g.targets[0].level == 1);
  CHECK(m.GoalAchieved(lifted, g));
  const WorldState lowered =
      MakeState(2, 2, 0, {{2, 2, 0, 0}}, std::optional<int>(0));
  CHECK_FALSE(m.GoalAchieved(lowered, g));
  const WorldState stacked =
      MakeState(0, 0, 1, {{2, 2, 1, 0}, {2, 2, 0, 0}});
  Goal g2 = GoalFromState(stacked);
  CHECK_FALSE(g2.targets[0].in_air);
}

TEST_CASE("goal validation classes and order") {
  GridConfig c;
  c.placement_area = {1, 1, 3, 3};
  const GoalMatcher m;
  const WorldState s0 = MakeState(0, 0, 1, {{1, 1, 0, 0}});
  CHECK(ValidateGoal(s0, s0, c, m) == GoalValidity::kInvalidUnmoved);
  const WorldState moved = MakeState(0, 0, 1, {{3, 1, 0, 0}});
  CHECK(ValidateGoal(s0, moved, c, m) == GoalValidity::kValid);
  const WorldState out = MakeState(0, 0, 1, {{4, 1, 0, 0}});
  CHECK(ValidateGoal(s0, out, c, m) == GoalValidity::kValidOutOfZone);
  // Starts outside the zone and stays put: unmoved wins over out-of-zone.
  const WorldState outside0 = MakeState(0, 0, 1, {{0, 0, 0, 0}});
  CHECK(ValidateGoal(outside0, outside0, c, m) ==
        GoalValidity::kInvalidUnmoved);
  // Only the gripper moved.
  WorldState grip_moved = s0;
  grip_moved.gripper.x = 4;
  CHECK(ValidateGoal(s0, grip_moved, c, m) == GoalValidity::kInvalidUnmoved);
  // Orientation only.
  const WorldState turned = MakeState(0, 0, 1, {{1, 1, 0, 1}});
  CHECK(ValidateGoal(s0, turned, c, m) == GoalValidity::kValid);
  // An object beyond the table edge (unreachable by Step) is off-table, and
  // that check precedes out-of-zone.
  const WorldState off = MakeState(0, 0, 1, {{7, 1, 0, 0}});
  CHECK(ValidateGoal(s0, off, c, m) == GoalValidity::kInvalidOffTable);
  CHECK(ToString(GoalValidity::kValidOutOfZone) == "valid_out_of_zone");
}

TEST_CASE("bob step reward latch") {
  const GoalMatcher m;
  const RewardParams p;
  const WorldState at = MakeState(0, 0, 1, {{1, 1, 0, 0}, {2, 2, 0, 0}});
  const Goal g = GoalFromState(at);
  const BobStepResult both = BobStepReward(AtGoalLatch::Empty(2), at, g, m, p);
  CHECK(both.reward == 7.0);
  CHECK(both.done);

  const WorldState one = MakeState(0, 0, 1, {{1, 1, 0, 0}, {3, 2, 0, 0}});
  const WorldState none = MakeState(0, 0, 1, {{0, 1, 0, 0}, {3, 2, 0, 0}});
  AtGoalLatch latch = AtGoalLatch::Empty(2);
  double total = 0.0;
  for (const WorldState* s : {&one, &none, &one}) {
    const BobStepResult r = BobStepReward(latch, *s, g, m, p);
    total += r.reward;
    latch = r.latch;
    CHECK_FALSE(r.done);
  }
  CHECK(total == 1.0);
  CHECK(BobStepReward(AtGoalLatch::Empty(2), none, g, m, p).reward == 0.0);
  CHECK_THROWS_AS(BobStepReward(AtGoalLatch::Empty(1), none, g, m, p),
                  ValidationError);
}

TEST_CASE("alice reward table") {
  const RewardParams p;
  CHECK(AliceGoalReward(GoalValidity::kValid, true, p) == 6.0);
  CHECK(AliceGoalReward(GoalValidity::kValid, false, p) == 1.0);
  CHECK(AliceGoalReward(GoalValidity::kValidOutOfZone, true, p) == 3.0);
  CHECK(AliceGoalReward(GoalValidity::kValidOutOfZone, false, p) == -2.0);
  CHECK(AliceGoalReward(GoalValidity::kInvalidUnmoved, true, p) == 0.0);
  CHECK(AliceGoalReward(GoalValidity::kInvalidOffTable, false, p) == 0.0);
  std::set<double> seen;
  for (auto v : {GoalValidity::kInvalidUnmoved, GoalValidity::kInvalidOffTable,
                 GoalValidity::kValidOutOfZone, GoalValidity::kValid}) {
    for (bool failed : {false, true}) seen.insert(AliceGoalReward(v, failed, p));
  }
  CHECK(seen == std::set<double>{0.0, 6.0, 1.0, 3.0, -2.0});
}

TEST_CASE("alice timestep reward") {
  const RewardParams p;
  CHECK(AliceTimestepReward(40, 40, p) == 0.0);
  CHECK(AliceTimestepReward(40, 140, p) == doctest::Approx(1.0));
  CHECK(AliceTimestepReward(100, 40, p) == 0.0);
  RewardParams t = p;
  t.alice_reward = AliceRewardMode::kTimestep;
  CHECK(AliceReward(GoalValidity::kValid, true, 40, 140, t) ==
        doctest::Approx(2.0));
  CHECK(AliceReward(GoalValidity::kValidOutOfZone, false, 40, 40, t) ==
        doctest::Approx(-2.0));
  t.timestep_out_of_zone_penalty = false;
  CHECK(AliceReward(GoalValidity::kValidOutOfZone, false, 40, 40, t) ==
        doctest::Approx(1.0));
  CHECK(AliceReward(GoalValidity::kInvalidUnmoved, false, 40, 140, t) == 0.0);
  CHECK(AliceReward(GoalValidity::kValid, true, 40, 140, p) == 6.0);
}

TEST_CASE("reward params validation") {
  RewardParams p;
  CHECK_NOTHROW(p.Validate());
  p.pos_threshold = 0.0;
  CHECK_THROWS_AS(p.Validate(), ConfigError);
  p = RewardParams{};
  p.bob_failed_bonus = -1;
  CHECK_THROWS_AS(p.Validate(), ConfigError);
}

TEST_CASE("goal of any reachable state is achieved in that state") {
  GridConfig c;
  const GoalMatcher m;
  Rng rng = MakeRng(5);
  WorldState s = SampleInitialState(c, 2, rng);
  for (int t = 0; t < 2000; ++t) {
    s = Step(c, s, Action::FromIndex(UniformInt(rng, kNumActions)));
    CHECK(m.GoalAchieved(s, GoalFromState(s)));
  }
}

TEST_CASE("per-object reward sums stay in {0, 1} over random turns") {
  GridConfig c;
  const GoalMatcher m;
  const RewardParams p;
  Rng rng = MakeRng(11);
  for (int turn = 0; turn < 300; ++turn) {
    // Start the turn at the goal so crossings happen often.
    const WorldState goal_state = SampleInitialState(c, 2, rng);
    WorldState s = goal_state;
    const Goal g = GoalFromState(goal_state);
    AtGoalLatch latch = AtGoalLatch::Empty(2);
    std::array<double, 2> per_object{};
    for (int t = 0; t < 60; ++t) {
      s = Step(c, s, Action::FromIndex(UniformInt(rng, kNumActions)));
      const BobStepResult r = BobStepReward(latch, s, g, m, p);
      for (int i = 0; i < 2; ++i) {
        per_object[i] += r.latch.at_goal[i] - latch.at_goal[i];
      }
      latch = r.latch;
      if (r.done) break;
    }
    for (int i = 0; i < 2; ++i) {
      CHECK((per_object[i] == 0.0 || per_object[i] == 1.0));
      CHECK(per_object[i] == latch.at_goal[i]);
    }
  }
}
