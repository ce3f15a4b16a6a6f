#include "asp/selfplay.hpp"

#include <atomic>
#include <exception>
#include <string>

#include "asp/errors.hpp"

namespace asp {

void GameConfig::Validate(const GridConfig& grid) const {
  if (alice_turn_steps < 1) throw ConfigError("game.alice_turn_steps must be >= 1");
  if (bob_max_steps_per_object < 1) {
    throw ConfigError("game.bob_max_steps_per_object must be >= 1");
  }
  if (max_goals_per_episode < 1) {
    throw ConfigError("game.max_goals_per_episode must be >= 1");
  }
  if (!(past_opponent_prob >= 0.0 && past_opponent_prob <= 1.0)) {
    throw ConfigError("game.past_opponent_prob must be in [0, 1]");
  }
  if (min_objects < 1 || max_objects < min_objects ||
      max_objects > grid.max_objects) {
    throw ConfigError("game object range must satisfy 1 <= min <= max <= "
                      "grid.max_objects");
  }
}

AliceTurn RunAliceTurn(const GridConfig& grid, const WorldState& start,
                       Actor& alice, int steps, Rng& rng) {
  AliceTurn turn;
  Trajectory& t = turn.trajectory;
  t.policy_version = alice.version();
  t.terminal = false;
  WorldState s = start;
  for (int k = 0; k < steps; ++k) {
    Observation obs = Observe(grid, s);
    const Decision d = alice.Act(ActorView{s, obs, nullptr}, rng);
    t.states.push_back(s);
    t.observations.push_back(std::move(obs));
    t.actions.push_back(d.action);
    t.log_probs.push_back(d.log_prob);
    t.values.push_back(d.value);
    t.rewards.push_back(0.0);
    s = Step(grid, s, d.action);
  }
  turn.final_state = std::move(s);
  return turn;
}

BobTurn RunBobTurn(const GridConfig& grid, const WorldState& start,
                   const Goal& goal, Actor& bob, int max_steps,
                   const GoalMatcher& matcher, const RewardParams& reward,
                   Rng& rng) {
  GridTableEnv env(grid);
  env.ResetTo(start);
  CheckGoalShape(grid, goal, start.NumObjects());
  if (matcher.GoalAchieved(start, goal)) {
    throw ValidationError("Bob's goal is already satisfied at the start state");
  }
  BobTurn turn;
  Trajectory& t = turn.trajectory;
  t.policy_version = bob.version();
  t.terminal = true;
  AtGoalLatch latch = AtGoalLatch::Empty(start.NumObjects());
  for (int k = 0; k < max_steps; ++k) {
    const WorldState& s = env.state();
    Observation obs = Observe(grid, s, goal, matcher);
    const Decision d = bob.Act(ActorView{s, obs, &goal}, rng);
    t.states.push_back(s);
    t.observations.push_back(std::move(obs));
    t.actions.push_back(d.action);
    t.log_probs.push_back(d.log_prob);
    t.values.push_back(d.value);
    const BobStepResult r =
        BobStepReward(latch, env.Step(d.action), goal, matcher, reward);
    t.rewards.push_back(r.reward);
    latch = r.latch;
    if (r.done) {
      turn.success = true;
      break;
    }
  }
  turn.final_state = env.state();
  return turn;
}

std::string_view ToString(Matchup m) {
  switch (m) {
    case Matchup::kCurrent: return "current";
    case Matchup::kPastAlice: return "past_alice";
    case Matchup::kPastBob: return "past_bob";
  }
  return "unknown";
}

int EpisodeRecord::TotalGoals() const {
  int n = 0;
  for (const GoalRecord& g : goals) n += g.outcome != BobOutcome::kSkipped;
  return n;
}

int EpisodeRecord::TotalSuccesses() const {
  int n = 0;
  for (const GoalRecord& g : goals) n += g.outcome == BobOutcome::kSuccess;
  return n;
}

EpisodeRecord PlayEpisode(const GameSetup& setup, Actor& alice, Actor& bob,
                          std::uint64_t seed) {
  const GridConfig& grid = setup.grid;
  const GameConfig& game = setup.game;
  const GoalMatcher matcher = setup.matcher();
  Rng rng = MakeRng(seed);

  EpisodeRecord ep;
  ep.seed = seed;
  const int n_objects =
      game.min_objects + UniformInt(rng, game.max_objects - game.min_objects + 1);
  ep.initial = SampleInitialState(grid, n_objects, rng);
  const int bob_max = game.BobMaxSteps(n_objects);

  WorldState state = ep.initial;
  bool bob_failed = false;
  for (int k = 0; k < game.max_goals_per_episode; ++k) {
    AliceTurn turn =
        RunAliceTurn(grid, state, alice, game.alice_turn_steps, rng);
    GoalRecord rec;
    rec.start = state;
    rec.goal = GoalFromState(turn.final_state);
    rec.validity = ValidateGoal(state, turn.final_state, grid, matcher);
    rec.alice_steps = game.alice_turn_steps;

    if (!IsValidClass(rec.validity)) {
      rec.outcome = BobOutcome::kSkipped;
      rec.alice_reward = 0.0;
      turn.trajectory.rewards.back() = 0.0;
      ep.alice.push_back(std::move(turn.trajectory));
      ep.goals.push_back(std::move(rec));
      break;
    }

    if (!bob_failed) {
      BobTurn bt = RunBobTurn(grid, state, rec.goal, bob, bob_max, matcher,
                              setup.reward, rng);
      rec.outcome = bt.success ? BobOutcome::kSuccess : BobOutcome::kFailure;
      rec.bob_steps = static_cast<int>(bt.trajectory.size());
      bob_failed = !bt.success;
      ep.bob.push_back(std::move(bt.trajectory));
    } else {
      rec.outcome = BobOutcome::kSkipped;
    }
    const bool failed = rec.outcome != BobOutcome::kSuccess;
    rec.alice_reward =
        AliceReward(rec.validity, failed, rec.alice_steps,
                    failed ? bob_max : rec.bob_steps, setup.reward);
    turn.trajectory.rewards.back() = rec.alice_reward;

    const bool demonstrate = setup.abc.filter_failures
                                 ? ShouldDemonstrate(rec.validity, rec.outcome)
                                 : IsValidClass(rec.validity);
    if (setup.abc.enabled && demonstrate) {
      const LogProbFn log_prob = [&bob](const Observation& o, const Action& a) {
        return bob.LogProb(o, a);
      };
      ep.demos.push_back(Relabel(grid, turn.trajectory, turn.final_state,
                                 rec.goal, log_prob, bob.version(), matcher));
      ep.demos.back().outcome = rec.outcome;
    }
    ep.alice.push_back(std::move(turn.trajectory));
    ep.goals.push_back(std::move(rec));
    state = std::move(turn.final_state);
  }
  if (!ep.alice.empty()) ep.alice.back().terminal = true;
  return ep;
}

OpponentPool::OpponentPool(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw ConfigError("pool capacity must be >= 1");
}

void OpponentPool::Add(const ParamVector& params, std::uint64_t step) {
  snapshots_.push_back(Snapshot{params, step});
  while (snapshots_.size() > capacity_) snapshots_.pop_front();
}

const Snapshot& OpponentPool::Sample(Rng& rng) const {
  if (snapshots_.empty()) throw ValidationError("sampling an empty pool");
  return snapshots_[UniformInt(rng, static_cast<int>(snapshots_.size()))];
}

MatchupDraw DrawMatchup(Rng& rng, double past_prob, std::size_t alice_pool,
                        std::size_t bob_pool) {
  MatchupDraw draw;
  if (!Bernoulli(rng, past_prob)) return draw;
  const bool past_alice = Bernoulli(rng, 0.5);
  const std::size_t size = past_alice ? alice_pool : bob_pool;
  if (size == 0) return draw;
  draw.matchup = past_alice ? Matchup::kPastAlice : Matchup::kPastBob;
  draw.snapshot = UniformInt(rng, static_cast<int>(size));
  return draw;
}

void RoundStats::Add(const EpisodeRecord& ep) {
  ++episodes;
  past_alice_games += ep.matchup == Matchup::kPastAlice;
  past_bob_games += ep.matchup == Matchup::kPastBob;
  for (const GoalRecord& g : ep.goals) {
    ++goals_set;
    valid_goals += g.validity == GoalValidity::kValid;
    out_of_zone_goals += g.validity == GoalValidity::kValidOutOfZone;
    invalid_goals += !IsValidClass(g.validity);
    bob_attempts += g.outcome != BobOutcome::kSkipped;
    bob_successes += g.outcome == BobOutcome::kSuccess;
    skipped_goals +=
        IsValidClass(g.validity) && g.outcome == BobOutcome::kSkipped;
    alice_reward += g.alice_reward;
  }
  demonstrations += static_cast<int>(ep.demos.size());
}

namespace {

std::atomic<int> g_active_collections{0};

EpisodeRecord PlayIndexed(const GameSetup& setup, const ParamVector& alice,
                          const ParamVector& bob, const OpponentPool& alice_pool,
                          const OpponentPool& bob_pool,
                          std::uint64_t round_seed, std::size_t index,
                          int attempt, const CollectOptions& options) {
  if (options.fault) options.fault(index, attempt);
  const std::uint64_t seed = DeriveSeed(round_seed, index);
  Rng draw_rng = MakeRng(DeriveSeed(seed, 0));
  const MatchupDraw draw =
      DrawMatchup(draw_rng, setup.game.past_opponent_prob, alice_pool.size(),
                  bob_pool.size());
  const ParamVector* alice_params = &alice;
  const ParamVector* bob_params = &bob;
  if (draw.matchup == Matchup::kPastAlice) {
    alice_params = &alice_pool.snapshots()[draw.snapshot].params;
  } else if (draw.matchup == Matchup::kPastBob) {
    bob_params = &bob_pool.snapshots()[draw.snapshot].params;
  }
  NetworkActor alice_actor(*alice_params);
  NetworkActor bob_actor(*bob_params);
  EpisodeRecord ep =
      PlayEpisode(setup, alice_actor, bob_actor, DeriveSeed(seed, 1));
  ep.seed = seed;
  ep.matchup = draw.matchup;
  ep.ingest_alice = draw.matchup != Matchup::kPastAlice;
  ep.ingest_bob = draw.matchup != Matchup::kPastBob;
  if (!ep.ingest_bob) ep.demos.clear();
  return ep;
}

}  // namespace

bool CollectionActive() { return g_active_collections.load() > 0; }

CollectionScope::CollectionScope() { ++g_active_collections; }
CollectionScope::~CollectionScope() { --g_active_collections; }

Rollouts CollectRollouts(const GameSetup& setup, const ParamVector& alice,
                         const ParamVector& bob, const OpponentPool& alice_pool,
                         const OpponentPool& bob_pool, std::uint64_t round_seed,
                         const CollectOptions& options) {
  setup.game.Validate(setup.grid);
  if (options.episodes < 1) throw ConfigError("episodes per round must be >= 1");
  CollectionScope scope;
  const std::size_t n = options.episodes;
  std::vector<EpisodeRecord> episodes(n);
  std::vector<std::uint8_t> failed(n, 0);

  auto run = [&](std::size_t i, int attempt) {
    episodes[i] = PlayIndexed(setup, alice, bob, alice_pool, bob_pool,
                              round_seed, i, attempt, options);
  };
  if (options.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      try {
        run(i, 0);
      } catch (...) {
        failed[i] = 1;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        run(i, 0);
      } catch (...) {
        failed[i] = 1;
      }
    }
  }

  Rollouts out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!failed[i]) continue;
    run(i, 1);
    ++out.stats.retried_episodes;
  }
  for (const EpisodeRecord& ep : episodes) out.stats.Add(ep);
  out.episodes = std::move(episodes);
  return out;
}

Buffers Harvest(const std::vector<EpisodeRecord>& episodes,
                const PpoHyperParams& hp, bool filter_failures) {
  Buffers buffers;
  for (const EpisodeRecord& ep : episodes) {
    if (ep.ingest_alice && !ep.alice.empty()) {
      std::vector<const Trajectory*> chain;
      for (const Trajectory& t : ep.alice) chain.push_back(&t);
      AppendTrajectories(chain, hp, buffers.alice);
    }
    if (ep.ingest_bob) {
      for (const Trajectory& t : ep.bob) {
        const Trajectory* one[] = {&t};
        AppendTrajectories(one, hp, buffers.bob);
      }
      for (const Demonstration& d : ep.demos) {
        if (filter_failures && d.outcome == BobOutcome::kSuccess) {
          throw ValidationError("demonstration of a goal Bob solved");
        }
        buffers.demos.Append(d);
      }
    }
  }
  return buffers;
}

}  // namespace asp
