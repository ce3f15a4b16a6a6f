#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "asp/abc.hpp"
#include "asp/actor.hpp"
#include "asp/env.hpp"
#include "asp/goal_rules.hpp"
#include "asp/policy_net.hpp"
#include "asp/ppo.hpp"
#include "asp/trajectory.hpp"

namespace asp {

struct GameConfig {
  int alice_turn_steps = 40;
  int bob_max_steps_per_object = 80;
  int max_goals_per_episode = 5;
  double past_opponent_prob = 0.2;
  int min_objects = 1;
  int max_objects = 1;

  void Validate(const GridConfig& grid) const;
  int BobMaxSteps(int n_objects) const {
    return bob_max_steps_per_object * n_objects;
  }
  bool operator==(const GameConfig&) const = default;
};

// Everything a game needs besides the two actors.
struct GameSetup {
  GridConfig grid;
  RewardParams reward;
  GameConfig game;
  AbcParams abc;

  GoalMatcher matcher() const { return GoalMatcher::For(grid, reward); }
};

struct AliceTurn {
  Trajectory trajectory;  // rewards provisionally 0
  WorldState final_state;
};

// Exactly `steps` Alice steps from `start`; observations carry no goal.
AliceTurn RunAliceTurn(const GridConfig& grid, const WorldState& start,
                       Actor& alice, int steps, Rng& rng);

struct BobTurn {
  Trajectory trajectory;
  bool success = false;
  WorldState final_state;
};

// Steps until the goal is achieved or `max_steps` run out. Throws
// ValidationError if `start` is invalid or already satisfies the goal.
BobTurn RunBobTurn(const GridConfig& grid, const WorldState& start,
                   const Goal& goal, Actor& bob, int max_steps,
                   const GoalMatcher& matcher, const RewardParams& reward,
                   Rng& rng);

enum class Matchup : std::uint8_t { kCurrent, kPastAlice, kPastBob };
std::string_view ToString(Matchup m);

struct GoalRecord {
  Goal goal;
  GoalValidity validity = GoalValidity::kInvalidUnmoved;
  BobOutcome outcome = BobOutcome::kSkipped;
  double alice_reward = 0.0;
  int alice_steps = 0;
  int bob_steps = 0;  // 0 when Bob did not play
  WorldState start;   // state Alice started this goal from
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  Matchup matchup = Matchup::kCurrent;
  WorldState initial;
  std::vector<GoalRecord> goals;
  // One per Alice turn, chained (only the last is terminal).
  std::vector<Trajectory> alice;
  // One per Bob turn actually played.
  std::vector<Trajectory> bob;
  std::vector<Demonstration> demos;
  // Which sides were the current generation (and so enter the buffers).
  bool ingest_alice = true;
  bool ingest_bob = true;

  // Goals Bob attempted (solved or failed; skipped goals excluded).
  int TotalGoals() const;
  int TotalSuccesses() const;
};

// One multi-goal game. `abc` decides which goals become demonstrations.
EpisodeRecord PlayEpisode(const GameSetup& setup, Actor& alice, Actor& bob,
                          std::uint64_t seed);

struct Snapshot {
  ParamVector params;
  std::uint64_t step = 0;  // optimizer step when taken
};

// Bounded FIFO of past parameter snapshots, sampled uniformly.
class OpponentPool {
 public:
  explicit OpponentPool(std::size_t capacity = 20);

  void Add(const ParamVector& params, std::uint64_t step);
  const Snapshot& Sample(Rng& rng) const;
  std::size_t size() const { return snapshots_.size(); }
  bool empty() const { return snapshots_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<Snapshot>& snapshots() const { return snapshots_; }

 private:
  std::size_t capacity_;
  std::deque<Snapshot> snapshots_;
};

struct MatchupDraw {
  Matchup matchup = Matchup::kCurrent;
  std::size_t snapshot = 0;  // index into the chosen side's pool
};

// With probability `past_prob` one side (uniform) plays a uniform past
// snapshot; a side with an empty pool falls back to the current pair.
MatchupDraw DrawMatchup(Rng& rng, double past_prob, std::size_t alice_pool,
                        std::size_t bob_pool);

struct CollectOptions {
  int episodes = 32;
  bool parallel = true;
  // Test hook: may throw to simulate a worker failure for (episode, attempt).
  std::function<void(std::size_t episode, int attempt)> fault;
};

struct RoundStats {
  int episodes = 0;
  int goals_set = 0;
  int valid_goals = 0;
  int out_of_zone_goals = 0;
  int invalid_goals = 0;
  int bob_attempts = 0;
  int bob_successes = 0;
  int skipped_goals = 0;
  int demonstrations = 0;
  int past_alice_games = 0;
  int past_bob_games = 0;
  int retried_episodes = 0;
  double alice_reward = 0.0;

  void Add(const EpisodeRecord& episode);
};

struct Rollouts {
  std::vector<EpisodeRecord> episodes;  // in episode-index order
  RoundStats stats;
};

// Plays `options.episodes` games with per-episode seeds derived from
// `round_seed`. Failed episodes are replayed serially with the same seed; a
// second failure propagates.
Rollouts CollectRollouts(const GameSetup& setup, const ParamVector& alice,
                         const ParamVector& bob, const OpponentPool& alice_pool,
                         const OpponentPool& bob_pool, std::uint64_t round_seed,
                         const CollectOptions& options);

// Buffers harvested from a round, respecting each episode's ingestion flags.
// With `filter_failures`, a demonstration of a solved goal is a logic error
// and throws ValidationError.
struct Buffers {
  TransitionBatch alice;
  TransitionBatch bob;
  DemoBatch demos;
};
Buffers Harvest(const std::vector<EpisodeRecord>& episodes,
                const PpoHyperParams& hp, bool filter_failures);

// True while any rollout collection is running in this process. Holdout goal
// generators refuse to run while it is set.
bool CollectionActive();

class CollectionScope {
 public:
  CollectionScope();
  ~CollectionScope();
  CollectionScope(const CollectionScope&) = delete;
  CollectionScope& operator=(const CollectionScope&) = delete;
};

}  // namespace asp
