#include <algorithm>
#include <numeric>

#include "asp/errors.hpp"
#include "asp/observation.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace asp;
using testing::MakeState;

TEST_CASE("alice observation has zero goal features") {
  GridConfig c;
  Rng rng = MakeRng(3);
  for (int k = 0; k < 50; ++k) {
    const WorldState s = SampleInitialState(c, 2, rng);
    const Observation obs = Observe(c, s);
    for (int i = 0; i < obs.NumObjects(); ++i) {
      const auto row = obs.Object(i);
      for (int f = feature::kFirstGoalFeature; f < kObjectFeatures; ++f) {
        CHECK(row[f] == 0.0);
      }
    }
  }
}

TEST_CASE("observing a state with its own goal") {
  GridConfig c;
  const WorldState s = MakeState(1, 0, 1, {{1, 1, 0, 2}, {4, 3, 0, 1}});
  const Observation obs = Observe(c, s, GoalFromState(s));
  for (int i = 0; i < 2; ++i) {
    const auto row = obs.Object(i);
    CHECK(row[feature::kAtGoal] == 1.0);
    CHECK(row[feature::kGoalOffset] == 0.0);
    CHECK(row[feature::kGoalOffset + 1] == 0.0);
    CHECK(row[feature::kGoalOffset + 2] == 0.0);
    CHECK(row[feature::kOrientationDelta] == 1.0);
  }
}

TEST_CASE("gripper offset is normalized by half the grid extent") {
  GridConfig c;
  c.width = c.height = 9;
  c.placement_area = {0, 0, 9, 9};
  const WorldState s = MakeState(0, 0, 1, {{3, 4, 0, 0}});
  const Observation obs = Observe(c, s);
  CHECK(obs.Object(0)[feature::kGripperOffset] == doctest::Approx(3.0 / 4));
  CHECK(obs.Object(0)[feature::kGripperOffset + 1] == doctest::Approx(1.0));
  CHECK(obs.gripper[0] == -1.0);
  CHECK(obs.gripper[1] == -1.0);
}

TEST_CASE("goal object-count mismatch throws") {
  GridConfig c;
  const WorldState s = MakeState(0, 0, 1, {{1, 1, 0, 0}, {2, 2, 0, 0}});
  Goal g = GoalFromState(s);
  g.targets.pop_back();
  CHECK_THROWS_AS(Observe(c, s, g), ValidationError);
}

TEST_CASE("observation decodes back to the state") {
  GridConfig c;
  GridTableEnv env(c);
  Rng rng = MakeRng(8);
  WorldState s = env.Reset(4, 2);
  for (int t = 0; t < 300; ++t) {
    s = Step(c, s, Action::FromIndex(UniformInt(rng, kNumActions)));
    WorldState expect = s;
    expect.step_count = 0;
    CHECK(DecodeObservation(c, Observe(c, s)) == expect);
  }
}

TEST_CASE("permuting objects reorders rows") {
  GridConfig c;
  const WorldState s = MakeState(0, 0, 1, {{1, 1, 0, 0}, {2, 2, 0, 3}});
  const Observation obs = Observe(c, s);
  const std::array<int, 2> perm{1, 0};
  const Observation p = PermuteObjects(obs, perm);
  CHECK(std::equal(p.Object(0).begin(), p.Object(0).end(),
                   obs.Object(1).begin()));
  CHECK(PermuteObjects(p, perm) == obs);
}
