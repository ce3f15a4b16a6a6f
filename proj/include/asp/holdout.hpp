#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asp/actor.hpp"
#include "asp/env.hpp"
#include "asp/goal_rules.hpp"
#include "asp/selfplay.hpp"

namespace asp {

enum class HoldoutKind : std::uint8_t { kPush, kFlip, kPickAndPlace, kStack };

struct HoldoutTask {
  std::string name;
  HoldoutKind kind = HoldoutKind::kPush;
  int n_objects = 1;
  int goals_per_episode = 5;
};

// Known names: push-1, push-2, flip-1, flip-2, pick-and-place-1,
// pick-and-place-2, stack-2. Throws ConfigError otherwise.
HoldoutTask MakeTask(std::string_view name);
const std::vector<std::string>& AllTaskNames();

// Next goal of `task` given the current state. Every goal moves at least one
// object; newly drawn cells lie in the placement area, so a state inside the
// area yields a valid goal. Throws std::logic_error while rollout collection
// is active.
Goal GenerateGoal(const GridConfig& grid, const HoldoutTask& task,
                  const WorldState& current, Rng& rng);

// Wilson score interval for a binomial proportion.
struct Interval {
  double low = 0.0;
  double high = 1.0;
};
inline constexpr double kZ99 = 2.5758293035489004;
Interval WilsonInterval(int successes, int trials, double z = kZ99);

struct EvalReport {
  std::string task;
  int episodes = 0;
  int total_goals = 0;
  int total_successes = 0;
  double success_rate = 0.0;
  Interval ci;
  // Per goal index within an episode: attempts and successes.
  std::vector<int> goals_at_index;
  std::vector<int> successes_at_index;
};

using ActorFactory = std::function<std::unique_ptr<Actor>()>;

struct EvalOptions {
  int episodes = 100;
  std::uint64_t seed = 0;
  bool parallel = true;
};

// Multi-goal episodes that stop at Bob's first failure.
EvalReport Evaluate(const GridConfig& grid, const RewardParams& reward,
                    const GameConfig& game, const ActorFactory& bob,
                    const HoldoutTask& task, const EvalOptions& options);
EvalReport Evaluate(const GridConfig& grid, const RewardParams& reward,
                    const GameConfig& game, const ParamVector& bob,
                    const HoldoutTask& task, const EvalOptions& options);

// Entry (i, j): Bob j's success rate on goals set by Alice i, over self-play
// episodes; empty when Alice i set no valid goal.
struct PayoffMatrix {
  std::vector<std::uint64_t> alice_steps;
  std::vector<std::uint64_t> bob_steps;
  std::vector<std::vector<std::optional<double>>> rate;
};

PayoffMatrix ComputePayoff(const GameSetup& setup,
                           const std::vector<Snapshot>& alices,
                           const std::vector<Snapshot>& bobs, int episodes,
                           std::uint64_t seed, bool parallel = true);

// Success rate of one pairing with arbitrary actors.
std::optional<double> CrossPlayRate(const GameSetup& setup,
                                    const ActorFactory& alice,
                                    const ActorFactory& bob, int episodes,
                                    std::uint64_t seed, bool parallel = true);

}  // namespace asp
