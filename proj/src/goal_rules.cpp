#include "asp/goal_rules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "asp/errors.hpp"

namespace asp {

ObjectPose PoseOf(const WorldState& state, int object) {
  const ObjectState& o = state.objects[object];
  const bool in_air = state.IsHeld(object) && state.gripper.z == 1;
  return ObjectPose{o.x, o.y, o.level, o.orientation, in_air};
}

Goal GoalFromState(const WorldState& state, GoalSource source) {
  Goal goal;
  goal.source = source;
  goal.targets.reserve(state.objects.size());
  for (int i = 0; i < state.NumObjects(); ++i) {
    goal.targets.push_back(PoseOf(state, i));
  }
  return goal;
}

void CheckGoalShape(const GridConfig& config, const Goal& goal,
                    int n_objects) {
  if (goal.NumObjects() != n_objects) {
    throw ValidationError("goal has " + std::to_string(goal.NumObjects()) +
                          " targets for " + std::to_string(n_objects) +
                          " objects");
  }
  for (const ObjectPose& t : goal.targets) {
    if (!config.InBounds(t.x, t.y)) {
      throw ValidationError("goal target outside grid");
    }
  }
}

std::string_view ToString(GoalValidity v) {
  switch (v) {
    case GoalValidity::kInvalidUnmoved: return "invalid_unmoved";
    case GoalValidity::kInvalidOffTable: return "invalid_off_table";
    case GoalValidity::kValidOutOfZone: return "valid_out_of_zone";
    case GoalValidity::kValid: return "valid";
  }
  return "unknown";
}

void RewardParams::Validate() const {
  for (double v : {valid_goal_bonus, bob_failed_bonus, out_of_zone_penalty,
                   per_object_reward, bob_success_bonus,
                   timestep_reward_scale}) {
    if (!(v >= 0.0)) throw ConfigError("reward magnitudes must be >= 0");
  }
  if (!(pos_threshold > 0.0) || !(rot_threshold > 0.0)) {
    throw ConfigError("success thresholds must be > 0");
  }
}

double RotationDistance(int orientation_a, int orientation_b) {
  const int d = ((orientation_a - orientation_b) % kNumOrientations +
                 kNumOrientations) %
                kNumOrientations;
  const int quarters = std::min(d, kNumOrientations - d);
  return quarters * (std::numbers::pi / 2.0);
}

GoalMatcher GoalMatcher::For(const GridConfig& grid,
                             const RewardParams& reward) {
  return GoalMatcher{grid.cell_size, reward.pos_threshold,
                     reward.rot_threshold, 1.0};
}

bool GoalMatcher::ObjectAtGoal(const ObjectPose& pose,
                               const ObjectPose& target) const {
  if (pose.level != target.level || pose.in_air != target.in_air) return false;
  const double dx = (pose.x - target.x) * cell_size;
  const double dy = (pose.y - target.y) * cell_size;
  if (std::hypot(dx, dy) > pos_threshold) return false;
  return rotation_weight *
             RotationDistance(pose.orientation, target.orientation) <=
         rot_threshold;
}

bool GoalMatcher::GoalAchieved(const WorldState& state,
                               const Goal& goal) const {
  if (goal.NumObjects() != state.NumObjects()) {
    throw ValidationError("goal/state object-count mismatch");
  }
  for (int i = 0; i < state.NumObjects(); ++i) {
    if (!ObjectAtGoal(PoseOf(state, i), goal.targets[i])) return false;
  }
  return true;
}

GoalValidity ValidateGoal(const WorldState& s0, const WorldState& s_t,
                          const GridConfig& config,
                          const GoalMatcher& matcher) {
  if (s0.NumObjects() != s_t.NumObjects()) {
    throw ValidationError("goal validation needs equal object counts");
  }
  bool moved = false;
  for (int i = 0; i < s0.NumObjects(); ++i) {
    if (!matcher.ObjectAtGoal(PoseOf(s_t, i), PoseOf(s0, i))) moved = true;
  }
  if (!moved) return GoalValidity::kInvalidUnmoved;
  // The grid is bounded so this never fires; kept so the check order matches
  // the continuous setting.
  for (const ObjectState& o : s_t.objects) {
    if (!config.InBounds(o.x, o.y)) return GoalValidity::kInvalidOffTable;
  }
  for (const ObjectState& o : s_t.objects) {
    if (!config.placement_area.Contains(o.x, o.y)) {
      return GoalValidity::kValidOutOfZone;
    }
  }
  return GoalValidity::kValid;
}

BobStepResult BobStepReward(const AtGoalLatch& prev, const WorldState& state,
                            const Goal& goal, const GoalMatcher& matcher,
                            const RewardParams& params) {
  const int n = state.NumObjects();
  if (static_cast<int>(prev.at_goal.size()) != n || goal.NumObjects() != n) {
    throw ValidationError("latch/goal/state object-count mismatch");
  }
  BobStepResult result;
  result.latch.at_goal.resize(n);
  bool all = true;
  for (int i = 0; i < n; ++i) {
    const bool now = matcher.ObjectAtGoal(PoseOf(state, i), goal.targets[i]);
    const bool before = prev.at_goal[i] != 0;
    if (now && !before) result.reward += params.per_object_reward;
    if (!now && before) result.reward -= params.per_object_reward;
    result.latch.at_goal[i] = now ? 1 : 0;
    all = all && now;
  }
  if (all) {
    result.reward += params.bob_success_bonus;
    result.done = true;
  }
  return result;
}

double AliceGoalReward(GoalValidity validity, bool bob_failed,
                       const RewardParams& params) {
  if (!IsValidClass(validity)) return 0.0;
  double reward = params.valid_goal_bonus;
  if (validity == GoalValidity::kValidOutOfZone) {
    reward -= params.out_of_zone_penalty;
  }
  if (bob_failed) reward += params.bob_failed_bonus;
  return reward;
}

double AliceTimestepReward(int alice_steps, int bob_steps_or_max,
                           const RewardParams& params) {
  return params.timestep_reward_scale *
         std::max(0, bob_steps_or_max - alice_steps);
}

double AliceReward(GoalValidity validity, bool bob_failed, int alice_steps,
                   int bob_steps_or_max, const RewardParams& params) {
  if (params.alice_reward == AliceRewardMode::kGame) {
    return AliceGoalReward(validity, bob_failed, params);
  }
  if (!IsValidClass(validity)) return 0.0;
  double reward = params.valid_goal_bonus +
                  AliceTimestepReward(alice_steps, bob_steps_or_max, params);
  if (validity == GoalValidity::kValidOutOfZone &&
      params.timestep_out_of_zone_penalty) {
    reward -= params.out_of_zone_penalty;
  }
  return reward;
}

}  // namespace asp
