#include <algorithm>
#include <cmath>
#include <set>

#include "asp/errors.hpp"
#include "asp/holdout.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace asp;

namespace {

GridConfig TwoObjectGrid() {
  GridConfig g;
  g.max_objects = 2;
  g.placement_area = {1, 1, 3, 3};
  return g;
}

ActorFactory Planner(const GridConfig& grid) {
  return [grid] { return std::make_unique<testing::BfsActor>(grid); };
}

}  // namespace

TEST_CASE("task registry") {
  CHECK(AllTaskNames().size() == 7);
  for (const std::string& name : AllTaskNames()) {
    const HoldoutTask t = MakeTask(name);
    CHECK(t.name == name);
    CHECK(t.goals_per_episode == 5);
    CHECK((t.n_objects == 1 || t.n_objects == 2));
  }
  CHECK(MakeTask("stack-2").kind == HoldoutKind::kStack);
  CHECK(MakeTask("pick-and-place-2").n_objects == 2);
  CHECK_THROWS_AS(MakeTask("stack-1"), ConfigError);
  CHECK_THROWS_AS(MakeTask("juggle-1"), ConfigError);
}

TEST_CASE("generated goals are valid and shaped by task") {
  const GridConfig grid = TwoObjectGrid();
  const GoalMatcher m;
  Rng rng = MakeRng(17);
  for (const std::string& name : AllTaskNames()) {
    const HoldoutTask task = MakeTask(name);
    for (int trial = 0; trial < 300; ++trial) {
      // Start from a random state reached by random play so held and
      // stacked objects occur.
      WorldState s = SampleInitialState(grid, task.n_objects, rng);
      const int steps = UniformInt(rng, 30);
      for (int k = 0; k < steps; ++k) {
        s = Step(grid, s, Action::FromIndex(UniformInt(rng, kNumActions)));
      }
      const Goal g = GenerateGoal(grid, task, s, rng);
      REQUIRE(g.NumObjects() == task.n_objects);
      CHECK(g.source == GoalSource::kHoldout);
      CHECK_FALSE(m.GoalAchieved(s, g));
      bool start_in_zone = true;
      for (const ObjectState& o : s.objects) {
        start_in_zone = start_in_zone && grid.placement_area.Contains(o.x, o.y);
      }
      int in_air = 0;
      std::set<std::tuple<int, int, int>> resting;
      for (int i = 0; i < g.NumObjects(); ++i) {
        const ObjectPose& t = g.targets[i];
        if (start_in_zone) CHECK(grid.placement_area.Contains(t.x, t.y));
        in_air += t.in_air;
        if (!t.in_air) CHECK(resting.insert({t.x, t.y, t.level}).second);
      }
      switch (task.kind) {
        case HoldoutKind::kPush:
          for (int i = 0; i < g.NumObjects(); ++i) {
            CHECK(g.targets[i].level == 0);
            CHECK(g.targets[i].orientation == s.objects[i].orientation);
          }
          CHECK(in_air == 0);
          break;
        case HoldoutKind::kFlip:
          for (int i = 0; i < g.NumObjects(); ++i) {
            CHECK(g.targets[i].x == s.objects[i].x);
            CHECK(g.targets[i].y == s.objects[i].y);
            CHECK(g.targets[i].orientation != s.objects[i].orientation);
          }
          CHECK(in_air == 0);
          break;
        case HoldoutKind::kPickAndPlace:
          CHECK(in_air == 1);
          break;
        case HoldoutKind::kStack: {
          CHECK(in_air == 0);
          CHECK(g.targets[0].x == g.targets[1].x);
          CHECK(g.targets[0].y == g.targets[1].y);
          CHECK(g.targets[0].level + g.targets[1].level == 1);
          break;
        }
      }
    }
  }
}

TEST_CASE("every holdout goal is solvable") {
  GridConfig small;
  small.width = 3;
  small.height = 3;
  small.max_objects = 2;
  small.placement_area = {0, 0, 3, 3};
  Rng rng = MakeRng(4);
  for (const std::string& name : AllTaskNames()) {
    const HoldoutTask task = MakeTask(name);
    for (int trial = 0; trial < 5; ++trial) {
      const WorldState s = SampleInitialState(small, task.n_objects, rng);
      const Goal g = GenerateGoal(small, task, s, rng);
      const auto r = oracle::BfsSolve(testing::ToOracle(small),
                                      testing::ToOracle(s), testing::ToOracle(g));
      CHECK(r.status == oracle::BfsStatus::kSolved);
    }
  }
}

TEST_CASE("wilson interval") {
  const Interval a = WilsonInterval(50, 100, 1.959963984540054);
  CHECK(a.low == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(a.high == doctest::Approx(0.5962).epsilon(1e-3));
  const Interval z = WilsonInterval(0, 40);
  CHECK(z.low == 0.0);
  CHECK(z.high > 0.0);
  const Interval f = WilsonInterval(40, 40);
  CHECK(f.high == doctest::Approx(1.0));
  CHECK(f.low < 1.0);
  const Interval none = WilsonInterval(0, 0);
  CHECK(none.low == 0.0);
  CHECK(none.high == 1.0);
  // Wider at 99% than at 95%.
  const Interval w = WilsonInterval(50, 100);
  CHECK(w.low < a.low);
  CHECK(w.high > a.high);
}

TEST_CASE("planner bob solves every single-object holdout task") {
  GridConfig grid;
  grid.max_objects = 1;
  RewardParams reward;
  GameConfig game;
  EvalOptions opts;
  opts.episodes = 20;
  opts.seed = 3;
  for (const char* name : {"push-1", "flip-1", "pick-and-place-1"}) {
    const EvalReport r =
        Evaluate(grid, reward, game, Planner(grid), MakeTask(name), opts);
    CHECK(r.success_rate == 1.0);
    CHECK(r.total_goals == 100);
    CHECK(r.goals_at_index == std::vector<int>(5, 20));
  }
}

TEST_CASE("idle bob fails the first goal of every episode") {
  GridConfig grid;
  EvalOptions opts;
  opts.episodes = 30;
  const ActorFactory idle = [] { return std::make_unique<FixedActor>(); };
  const EvalReport r = Evaluate(grid, RewardParams{}, GameConfig{}, idle,
                                MakeTask("push-2"), opts);
  CHECK(r.total_goals == 30);
  CHECK(r.total_successes == 0);
  CHECK(r.goals_at_index[0] == 30);
  CHECK(r.goals_at_index[1] == 0);
  CHECK(r.ci.low == 0.0);

  GridConfig one;
  one.max_objects = 1;
  CHECK_THROWS_AS(Evaluate(one, RewardParams{}, GameConfig{}, idle,
                           MakeTask("stack-2"), opts),
                  ConfigError);
}

TEST_CASE("evaluation does not depend on scheduling") {
  GridConfig grid;
  ArchitectureSpec spec;
  spec.object_embed_widths = {8};
  spec.trunk_widths = {8};
  const ParamVector bob = InitParams(spec, 9, InitOptions{1.0, 1.0});
  EvalOptions a;
  a.episodes = 40;
  a.seed = 12;
  a.parallel = false;
  EvalOptions b = a;
  b.parallel = true;
  const HoldoutTask task = MakeTask("push-1");
  const EvalReport x = Evaluate(grid, RewardParams{}, GameConfig{}, bob, task, a);
  const EvalReport y = Evaluate(grid, RewardParams{}, GameConfig{}, bob, task, b);
  CHECK(x.total_goals == y.total_goals);
  CHECK(x.total_successes == y.total_successes);
  CHECK(x.successes_at_index == y.successes_at_index);
}

TEST_CASE("cross-play and payoff matrix") {
  GameSetup setup;
  setup.grid.max_objects = 1;
  setup.game.alice_turn_steps = 10;
  const ActorFactory random_alice = [] {
    return std::make_unique<UniformRandomActor>();
  };
  const auto rate =
      CrossPlayRate(setup, random_alice, Planner(setup.grid), 20, 5);
  REQUIRE(rate.has_value());
  CHECK(*rate == 1.0);
  const ActorFactory idle = [] { return std::make_unique<FixedActor>(); };
  CHECK_FALSE(CrossPlayRate(setup, idle, idle, 10, 5).has_value());

  ArchitectureSpec spec;
  spec.object_embed_widths = {8};
  spec.trunk_widths = {8};
  std::vector<Snapshot> alices = {{InitParams(spec, 1), 30},
                                  {InitParams(spec, 2), 10}};
  std::vector<Snapshot> bobs = {{InitParams(spec, 3), 20}};
  const PayoffMatrix m = ComputePayoff(setup, alices, bobs, 10, 8);
  CHECK(m.alice_steps == std::vector<std::uint64_t>{10, 30});
  CHECK(m.bob_steps == std::vector<std::uint64_t>{20});
  REQUIRE(m.rate.size() == 2);
  for (const auto& row : m.rate) {
    REQUIRE(row.size() == 1);
    if (row[0]) CHECK((*row[0] >= 0.0 && *row[0] <= 1.0));
  }
  // A 1x1 matrix is the plain cross-play rate.
  const PayoffMatrix one = ComputePayoff(setup, {alices[1]}, bobs, 10, 8);
  const ParamVector& ap = alices[1].params;
  const ParamVector& bp = bobs[0].params;
  const auto direct = CrossPlayRate(
      setup, [&ap] { return std::make_unique<NetworkActor>(ap); },
      [&bp] { return std::make_unique<NetworkActor>(bp); }, 10,
      DeriveSeed(8, 0));
  CHECK(one.rate[0][0] == direct);
  CHECK_THROWS_AS(ComputePayoff(setup, {}, bobs, 10, 8), ConfigError);
}
