#pragma once

#include <array>
#include <span>
#include <vector>

#include "asp/env.hpp"
#include "asp/goal_rules.hpp"

namespace asp {

inline constexpr int kGripperFeatures = 4;
inline constexpr int kObjectFeatures = 19;

// Per-object feature layout (offsets into one object's row).
namespace feature {
inline constexpr int kPosition = 0;          // x, y in [-1, 1]
inline constexpr int kLevel = 2;             // level / max_stack_height
inline constexpr int kOrientation = 3;       // one-hot, 4 entries
inline constexpr int kHeld = 7;
inline constexpr int kGripperOffset = 8;     // object - gripper, 2 entries
inline constexpr int kGoalOffset = 10;       // target - object: dx, dy, dlevel
inline constexpr int kOrientationDelta = 13; // one-hot of target - current
inline constexpr int kTargetInAir = 17;
inline constexpr int kAtGoal = 18;
inline constexpr int kFirstGoalFeature = kGoalOffset;
}  // namespace feature

// Gripper features followed by one fixed-width row per object. Row order
// carries no information for the policy (it max-pools over rows).
struct Observation {
  std::array<double, kGripperFeatures> gripper{};
  std::vector<double> objects;

  int NumObjects() const {
    return static_cast<int>(objects.size()) / kObjectFeatures;
  }
  std::span<const double> Object(int i) const {
    return {objects.data() + static_cast<std::size_t>(i) * kObjectFeatures,
            kObjectFeatures};
  }
  bool operator==(const Observation&) const = default;
};

// Observation without goal: every goal-derived entry is zero (Alice).
Observation Observe(const GridConfig& config, const WorldState& state);
// Goal-conditioned observation (Bob). Throws ValidationError on object-count
// mismatch.
Observation Observe(const GridConfig& config, const WorldState& state,
                    const Goal& goal, const GoalMatcher& matcher);
Observation Observe(const GridConfig& config, const WorldState& state,
                    const Goal& goal);

// Recovers the world state encoded in an observation (step_count = 0).
WorldState DecodeObservation(const GridConfig& config, const Observation& obs);

// Reorders object rows: row i of the result is row perm[i] of `obs`.
Observation PermuteObjects(const Observation& obs, std::span<const int> perm);

}  // namespace asp
