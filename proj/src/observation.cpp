#include "asp/observation.hpp"

#include <cmath>

#include "asp/errors.hpp"

namespace asp {

namespace {

double HalfExtent(int cells) { return (cells - 1) / 2.0; }

double Normalize(int v, int cells) {
  return (v - HalfExtent(cells)) / HalfExtent(cells);
}

int Denormalize(double v, int cells) {
  return static_cast<int>(std::lround(v * HalfExtent(cells) + HalfExtent(cells)));
}

Observation ObserveImpl(const GridConfig& config, const WorldState& state,
                        const Goal* goal, const GoalMatcher* matcher) {
  const int n = state.NumObjects();
  if (goal != nullptr && goal->NumObjects() != n) {
    throw ValidationError("observation goal has " +
                          std::to_string(goal->NumObjects()) +
                          " targets for " + std::to_string(n) + " objects");
  }
  const double hx = HalfExtent(config.width);
  const double hy = HalfExtent(config.height);
  const double levels = config.max_stack_height;
  const GripperState& g = state.gripper;

  Observation obs;
  obs.gripper = {Normalize(g.x, config.width), Normalize(g.y, config.height),
                 static_cast<double>(g.z), g.holding ? 1.0 : 0.0};
  obs.objects.assign(static_cast<std::size_t>(n) * kObjectFeatures, 0.0);
  for (int i = 0; i < n; ++i) {
    const ObjectState& o = state.objects[i];
    double* row = obs.objects.data() + static_cast<std::size_t>(i) * kObjectFeatures;
    row[feature::kPosition] = Normalize(o.x, config.width);
    row[feature::kPosition + 1] = Normalize(o.y, config.height);
    row[feature::kLevel] = o.level / levels;
    row[feature::kOrientation + o.orientation] = 1.0;
    row[feature::kHeld] = state.IsHeld(i) ? 1.0 : 0.0;
    row[feature::kGripperOffset] = (o.x - g.x) / hx;
    row[feature::kGripperOffset + 1] = (o.y - g.y) / hy;
    if (goal == nullptr) continue;
    const ObjectPose& t = goal->targets[i];
    row[feature::kGoalOffset] = (t.x - o.x) / hx;
    row[feature::kGoalOffset + 1] = (t.y - o.y) / hy;
    row[feature::kGoalOffset + 2] = (t.level - o.level) / levels;
    const int delta = ((t.orientation - o.orientation) % kNumOrientations +
                       kNumOrientations) %
                      kNumOrientations;
    row[feature::kOrientationDelta + delta] = 1.0;
    row[feature::kTargetInAir] = t.in_air ? 1.0 : 0.0;
    row[feature::kAtGoal] = matcher->ObjectAtGoal(PoseOf(state, i), t) ? 1.0 : 0.0;
  }
  return obs;
}

}  // namespace

Observation Observe(const GridConfig& config, const WorldState& state) {
  return ObserveImpl(config, state, nullptr, nullptr);
}

Observation Observe(const GridConfig& config, const WorldState& state,
                    const Goal& goal, const GoalMatcher& matcher) {
  return ObserveImpl(config, state, &goal, &matcher);
}

Observation Observe(const GridConfig& config, const WorldState& state,
                    const Goal& goal) {
  const GoalMatcher matcher = GoalMatcher::For(config, RewardParams{});
  return ObserveImpl(config, state, &goal, &matcher);
}

WorldState DecodeObservation(const GridConfig& config, const Observation& obs) {
  WorldState state;
  state.gripper.x = Denormalize(obs.gripper[0], config.width);
  state.gripper.y = Denormalize(obs.gripper[1], config.height);
  state.gripper.z = static_cast<int>(std::lround(obs.gripper[2]));
  for (int i = 0; i < obs.NumObjects(); ++i) {
    const auto row = obs.Object(i);
    ObjectState o;
    o.x = Denormalize(row[feature::kPosition], config.width);
    o.y = Denormalize(row[feature::kPosition + 1], config.height);
    o.level = static_cast<int>(
        std::lround(row[feature::kLevel] * config.max_stack_height));
    for (int r = 0; r < kNumOrientations; ++r) {
      if (row[feature::kOrientation + r] > 0.5) o.orientation = r;
    }
    if (row[feature::kHeld] > 0.5) state.gripper.holding = i;
    state.objects.push_back(o);
  }
  return state;
}

Observation PermuteObjects(const Observation& obs, std::span<const int> perm) {
  if (static_cast<int>(perm.size()) != obs.NumObjects()) {
    throw ValidationError("permutation size mismatch");
  }
  Observation out;
  out.gripper = obs.gripper;
  out.objects.reserve(obs.objects.size());
  for (int src : perm) {
    const auto row = obs.Object(src);
    out.objects.insert(out.objects.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace asp
