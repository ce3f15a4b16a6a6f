#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "asp/env.hpp"

namespace asp {

// Pose of one object as seen by the success predicate. An object is in the
// air exactly when it is held by a raised gripper.
struct ObjectPose {
  int x = 0;
  int y = 0;
  int level = 0;
  int orientation = 0;
  bool in_air = false;
  bool operator==(const ObjectPose&) const = default;
};

ObjectPose PoseOf(const WorldState& state, int object);

enum class GoalSource : std::uint8_t { kAlice, kHoldout };

struct Goal {
  std::vector<ObjectPose> targets;
  GoalSource source = GoalSource::kAlice;

  int NumObjects() const { return static_cast<int>(targets.size()); }
  bool operator==(const Goal&) const = default;
};

// The goal whose every target is the current pose of the matching object.
Goal GoalFromState(const WorldState& state,
                   GoalSource source = GoalSource::kAlice);

// Throws ValidationError when the goal's object count differs from
// `n_objects` or a target leaves the grid.
void CheckGoalShape(const GridConfig& config, const Goal& goal, int n_objects);

enum class GoalValidity : std::uint8_t {
  kInvalidUnmoved,
  kInvalidOffTable,
  kValidOutOfZone,
  kValid,
};

inline bool IsValidClass(GoalValidity v) {
  return v == GoalValidity::kValid || v == GoalValidity::kValidOutOfZone;
}
std::string_view ToString(GoalValidity v);

enum class AliceRewardMode : std::uint8_t { kGame, kTimestep };

struct RewardParams {
  double valid_goal_bonus = 1.0;
  double bob_failed_bonus = 5.0;
  double out_of_zone_penalty = 3.0;
  double per_object_reward = 1.0;
  double bob_success_bonus = 5.0;
  double pos_threshold = 0.04;  // meters
  double rot_threshold = 0.2;   // radians
  double timestep_reward_scale = 0.01;
  AliceRewardMode alice_reward = AliceRewardMode::kGame;
  // Whether the out-of-zone penalty also applies under kTimestep.
  bool timestep_out_of_zone_penalty = true;

  void Validate() const;
  bool operator==(const RewardParams&) const = default;
};

// Minimal rotation angle between two quarter-turn orientations, in radians.
double RotationDistance(int orientation_a, int orientation_b);

// Success predicate: position within pos_threshold (Euclidean, in meters),
// weighted rotation distance within rot_threshold, and identical level and
// in-air status. With 0.05 m cells and quarter turns this is exact matching.
struct GoalMatcher {
  double cell_size = 0.05;
  double pos_threshold = 0.04;
  double rot_threshold = 0.2;
  double rotation_weight = 1.0;  // < 1 relaxes rotation (curriculum use)

  static GoalMatcher For(const GridConfig& grid, const RewardParams& reward);

  bool ObjectAtGoal(const ObjectPose& pose, const ObjectPose& target) const;
  // Throws ValidationError on object-count mismatch.
  bool GoalAchieved(const WorldState& state, const Goal& goal) const;
};

// Ordered checks: unmoved, off table, out of placement zone, valid.
GoalValidity ValidateGoal(const WorldState& s0, const WorldState& s_t,
                          const GridConfig& config, const GoalMatcher& matcher);

// Per-object record of whether the object currently sits at its target.
struct AtGoalLatch {
  std::vector<std::uint8_t> at_goal;

  static AtGoalLatch Empty(int n_objects) {
    return AtGoalLatch{std::vector<std::uint8_t>(n_objects, 0)};
  }
  bool operator==(const AtGoalLatch&) const = default;
};

struct BobStepResult {
  double reward = 0.0;
  AtGoalLatch latch;
  bool done = false;
};

// +1 per object entering its target, -1 per object leaving it, plus the
// success bonus once every object is at its target.
BobStepResult BobStepReward(const AtGoalLatch& prev, const WorldState& state,
                            const Goal& goal, const GoalMatcher& matcher,
                            const RewardParams& params);

// Alice's per-goal game reward: 0 for invalid goals, otherwise the valid bonus,
// minus the out-of-zone penalty, plus the failure bonus when Bob failed.
double AliceGoalReward(GoalValidity validity, bool bob_failed,
                       const RewardParams& params);

// Timestep-based alternative: scale * max(0, bob_steps - alice_steps), where a
// failed Bob turn counts as the maximum allowed steps.
double AliceTimestepReward(int alice_steps, int bob_steps_or_max,
                           const RewardParams& params);

// Alice's reward for one goal under the configured mode.
double AliceReward(GoalValidity validity, bool bob_failed, int alice_steps,
                   int bob_steps_or_max, const RewardParams& params);

}  // namespace asp
