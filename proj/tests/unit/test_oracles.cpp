#include <cmath>

#include "asp/env.hpp"
#include "asp/goal_rules.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace asp;
using testing::MakeState;

namespace {

WorldState Replay(const GridConfig& c, WorldState s,
                  const std::vector<oracle::Act>& script) {
  for (const auto& a : script) s = Step(c, s, testing::FromOracle(a));
  return s;
}

}  // namespace

TEST_CASE("bfs returns an empty script when already solved") {
  const WorldState s = MakeState(0, 0, 1, {{2, 2, 0, 0}});
  const auto r = oracle::BfsSolve({}, testing::ToOracle(s),
                                  testing::ToOracle(GoalFromState(s)));
  CHECK(r.status == oracle::BfsStatus::kSolved);
  CHECK(r.script.empty());
}

TEST_CASE("bfs pushes one object a cell east in few steps") {
  GridConfig c;
  const WorldState s = MakeState(1, 2, 1, {{2, 2, 0, 0}});
  Goal g = GoalFromState(s);
  g.targets[0].x = 3;
  const auto r = oracle::BfsSolve(testing::ToOracle(c), testing::ToOracle(s),
                                  testing::ToOracle(g));
  REQUIRE(r.status == oracle::BfsStatus::kSolved);
  CHECK(r.script.size() <= 6);
  CHECK(GoalMatcher{}.GoalAchieved(Replay(c, s, r.script), g));
}

TEST_CASE("bfs stacks two objects on a 3x3 grid") {
  GridConfig c;
  c.width = c.height = 3;
  c.placement_area = {0, 0, 3, 3};
  const WorldState s = MakeState(1, 1, 1, {{0, 0, 0, 0}, {2, 2, 0, 1}});
  Goal g = GoalFromState(s);
  g.targets[1] = {0, 0, 1, 1, false};
  const auto r = oracle::BfsSolve(testing::ToOracle(c), testing::ToOracle(s),
                                  testing::ToOracle(g));
  REQUIRE(r.status == oracle::BfsStatus::kSolved);
  CHECK(GoalMatcher{}.GoalAchieved(Replay(c, s, r.script), g));
}

TEST_CASE("bfs reports unreachable goals and the expansion limit") {
  GridConfig c;
  c.width = c.height = 3;
  c.placement_area = {0, 0, 3, 3};
  const WorldState s = MakeState(1, 1, 1, {{0, 0, 0, 0}});
  Goal g = GoalFromState(s);
  g.targets[0].level = 2;  // nothing to stand on
  const auto r = oracle::BfsSolve(testing::ToOracle(c), testing::ToOracle(s),
                                  testing::ToOracle(g));
  CHECK(r.status == oracle::BfsStatus::kUnreachable);
  const auto limited = oracle::BfsSolve(testing::ToOracle(c), testing::ToOracle(s),
                                        testing::ToOracle(g), 10);
  CHECK(limited.status == oracle::BfsStatus::kLimitExceeded);
}

TEST_CASE("oracle canonical form matches the library serialization") {
  GridTableEnv env(GridConfig{});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const WorldState& s = env.Reset(seed, 2);
    CHECK(oracle::Canonical(testing::ToOracle(s)) == SerializeState(s));
  }
}

TEST_CASE("finite differences on analytic functions") {
  const auto quad = oracle::FiniteDifferenceGrad(
      [](const std::vector<double>& x) { return x[0] * x[0] + x[1] * x[1]; },
      {1.0, 2.0}, {0, 1}, 1e-5);
  CHECK(std::abs(quad[0] - 2.0) < 1e-8);
  CHECK(std::abs(quad[1] - 4.0) < 1e-8);
  for (double h : {1e-1, 1e-3, 1.0}) {
    const auto lin = oracle::FiniteDifferenceGrad(
        [](const std::vector<double>& x) { return 3.0 * x[0] - 0.5 * x[1]; },
        {0.7, -1.1}, {0, 1}, h);
    CHECK(lin[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(lin[1] == doctest::Approx(-0.5).epsilon(1e-12));
  }
}

TEST_CASE("gae reference special cases") {
  const std::vector<double> r{1.0, 0.5, -0.2}, v{0.2, 0.1, 0.4};
  const std::vector<std::uint8_t> d{0, 0, 1};
  const auto td = oracle::GaeReference(r, v, d, 0.9, 0.0);
  CHECK(td[0] == doctest::Approx(1.0 + 0.9 * 0.1 - 0.2));
  CHECK(td[2] == doctest::Approx(-0.2 - 0.4));
  const auto mc = oracle::GaeReference(r, v, d, 0.9, 1.0);
  const auto ret = oracle::DiscountedReturns(r, d, 0.9);
  for (int t = 0; t < 3; ++t) CHECK(mc[t] == doctest::Approx(ret[t] - v[t]));
}
