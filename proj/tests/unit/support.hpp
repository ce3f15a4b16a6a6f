#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "asp/actor.hpp"
#include "asp/env.hpp"
#include "asp/goal_rules.hpp"
#include "oracles.hpp"

namespace testing {

inline oracle::Grid ToOracle(const asp::GridConfig& c) {
  return {c.width, c.height, c.max_stack_height};
}

inline oracle::State ToOracle(const asp::WorldState& s) {
  oracle::State o;
  o.gx = s.gripper.x;
  o.gy = s.gripper.y;
  o.gz = s.gripper.z;
  o.held = s.gripper.holding ? *s.gripper.holding : -1;
  o.steps = s.step_count;
  for (const auto& obj : s.objects) {
    o.objects.push_back({obj.x, obj.y, obj.level, obj.orientation});
  }
  return o;
}

inline std::vector<oracle::Target> ToOracle(const asp::Goal& g) {
  std::vector<oracle::Target> out;
  for (const auto& t : g.targets) {
    out.push_back({t.x, t.y, t.level, t.orientation, t.in_air});
  }
  return out;
}

inline asp::Action FromOracle(const oracle::Act& a) {
  return asp::Action::FromFactorIndices({a[0], a[1], a[2]});
}

inline asp::WorldState MakeState(int gx, int gy, int gz,
                                 std::vector<asp::ObjectState> objects,
                                 std::optional<int> holding = std::nullopt) {
  asp::WorldState s;
  s.gripper = {gx, gy, gz, holding};
  s.objects = std::move(objects);
  return s;
}

// Bob driven by the BFS oracle: replans from the current state each step.
class BfsActor : public asp::Actor {
 public:
  explicit BfsActor(asp::GridConfig grid) : grid_(std::move(grid)) {}

  asp::Decision Act(const asp::ActorView& view, asp::Rng&) override {
    if (view.goal == nullptr) throw std::logic_error("BfsActor needs a goal");
    const auto r = oracle::BfsSolve(ToOracle(grid_), ToOracle(view.state),
                                    ToOracle(*view.goal));
    if (r.status != oracle::BfsStatus::kSolved || r.script.empty()) {
      return asp::Decision{asp::Action{}, 0.0, 0.0};
    }
    return asp::Decision{FromOracle(r.script.front()), 0.0, 0.0};
  }
  double LogProb(const asp::Observation&, const asp::Action&) override {
    return 0.0;
  }

 private:
  asp::GridConfig grid_;
};

}  // namespace testing
