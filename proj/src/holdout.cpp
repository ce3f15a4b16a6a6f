#include "asp/holdout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "asp/errors.hpp"

namespace asp {

HoldoutTask MakeTask(std::string_view name) {
  HoldoutTask t;
  t.name = std::string(name);
  if (name == "push-1" || name == "push-2") {
    t.kind = HoldoutKind::kPush;
  } else if (name == "flip-1" || name == "flip-2") {
    t.kind = HoldoutKind::kFlip;
  } else if (name == "pick-and-place-1" || name == "pick-and-place-2") {
    t.kind = HoldoutKind::kPickAndPlace;
  } else if (name == "stack-2") {
    t.kind = HoldoutKind::kStack;
  } else {
    throw ConfigError("unknown holdout task '" + std::string(name) + "'");
  }
  t.n_objects = name.back() - '0';
  return t;
}

const std::vector<std::string>& AllTaskNames() {
  static const std::vector<std::string> kNames = {
      "push-1", "push-2", "flip-1", "flip-2",
      "pick-and-place-1", "pick-and-place-2", "stack-2"};
  return kNames;
}

namespace {

struct Cell {
  int x = 0, y = 0;
  bool operator==(const Cell&) const = default;
};

Cell RandomPlacementCell(const GridConfig& grid, Rng& rng) {
  const CellRect& a = grid.placement_area;
  const int k = UniformInt(rng, a.Area());
  return {a.x0 + k % a.width, a.y0 + k / a.width};
}

// Distinct placement cells.
std::vector<Cell> DistinctCells(const GridConfig& grid, int n, Rng& rng) {
  std::vector<Cell> cells;
  while (static_cast<int>(cells.size()) < n) {
    const Cell c = RandomPlacementCell(grid, rng);
    if (std::find(cells.begin(), cells.end(), c) == cells.end()) {
      cells.push_back(c);
    }
  }
  return cells;
}

Goal Draft(const GridConfig& grid, const HoldoutTask& task,
           const WorldState& current, Rng& rng) {
  const int n = current.NumObjects();
  Goal g;
  g.source = GoalSource::kHoldout;
  g.targets.resize(n);
  switch (task.kind) {
    case HoldoutKind::kPush: {
      const auto cells = DistinctCells(grid, n, rng);
      for (int i = 0; i < n; ++i) {
        g.targets[i] = {cells[i].x, cells[i].y, 0,
                        current.objects[i].orientation, false};
      }
      break;
    }
    case HoldoutKind::kFlip: {
      // Same cell and resting level as now; a held object counts as resting
      // where it would land.
      for (int i = 0; i < n; ++i) {
        const ObjectState& o = current.objects[i];
        const int turns = 1 + UniformInt(rng, kNumOrientations - 1);
        int level = o.level;
        if (current.IsHeld(i)) level = StackHeight(current, o.x, o.y);
        g.targets[i] = {o.x, o.y, level, (o.orientation + turns) % kNumOrientations,
                        false};
      }
      break;
    }
    case HoldoutKind::kPickAndPlace: {
      const int lifted = UniformInt(rng, n);
      const auto cells = DistinctCells(grid, n, rng);
      for (int i = 0; i < n; ++i) {
        const ObjectState& o = current.objects[i];
        if (i == lifted) {
          g.targets[i] = {cells[i].x, cells[i].y, 1, o.orientation, true};
        } else if (o.level == 0 && !current.IsHeld(i)) {
          g.targets[i] = {o.x, o.y, 0, o.orientation, false};
        } else {
          g.targets[i] = {cells[i].x, cells[i].y, 0, o.orientation, false};
        }
      }
      break;
    }
    case HoldoutKind::kStack: {
      const Cell c = RandomPlacementCell(grid, rng);
      const int bottom = UniformInt(rng, n);
      for (int i = 0; i < n; ++i) {
        const int level = i == bottom ? 0 : 1;
        g.targets[i] = {c.x, c.y, level, current.objects[i].orientation, false};
      }
      break;
    }
  }
  return g;
}

// Resting positions of a goal must not collide (in-air targets excluded).
bool Consistent(const Goal& g) {
  for (std::size_t i = 0; i < g.targets.size(); ++i) {
    for (std::size_t j = i + 1; j < g.targets.size(); ++j) {
      const ObjectPose& a = g.targets[i];
      const ObjectPose& b = g.targets[j];
      if (a.in_air || b.in_air) continue;
      if (a.x == b.x && a.y == b.y && a.level == b.level) return false;
    }
  }
  return true;
}

}  // namespace

Goal GenerateGoal(const GridConfig& grid, const HoldoutTask& task,
                  const WorldState& current, Rng& rng) {
  if (CollectionActive()) {
    throw std::logic_error("holdout goal requested during self-play collection");
  }
  if (current.NumObjects() != task.n_objects) {
    throw ValidationError("holdout task object count differs from the state");
  }
  const GoalMatcher matcher;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Goal g = Draft(grid, task, current, rng);
    if (!Consistent(g)) continue;
    bool moved = false;
    for (int i = 0; i < current.NumObjects(); ++i) {
      if (!matcher.ObjectAtGoal(PoseOf(current, i), g.targets[i])) moved = true;
    }
    if (moved) return g;
  }
  throw ValidationError("could not draw a valid holdout goal");
}

Interval WilsonInterval(int successes, int trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

struct EvalEpisode {
  std::vector<std::uint8_t> outcomes;  // 1 success, 0 failure, in goal order
};

EvalEpisode RunEvalEpisode(const GridConfig& grid, const RewardParams& reward,
                           const GameConfig& game, Actor& bob,
                           const HoldoutTask& task, std::uint64_t seed) {
  Rng rng = MakeRng(seed);
  const GoalMatcher matcher = GoalMatcher::For(grid, reward);
  WorldState state = SampleInitialState(grid, task.n_objects, rng);
  EvalEpisode ep;
  for (int k = 0; k < task.goals_per_episode; ++k) {
    const Goal goal = GenerateGoal(grid, task, state, rng);
    BobTurn turn = RunBobTurn(grid, state, goal, bob,
                              game.BobMaxSteps(task.n_objects), matcher,
                              reward, rng);
    ep.outcomes.push_back(turn.success ? 1 : 0);
    if (!turn.success) break;
    state = std::move(turn.final_state);
  }
  return ep;
}

}  // namespace

EvalReport Evaluate(const GridConfig& grid, const RewardParams& reward,
                    const GameConfig& game, const ActorFactory& bob,
                    const HoldoutTask& task, const EvalOptions& options) {
  if (options.episodes < 1) throw ConfigError("evaluation needs >= 1 episode");
  if (task.n_objects > grid.max_objects) {
    throw ConfigError("task " + task.name + " needs more objects than the grid allows");
  }
  const int n = options.episodes;
  std::vector<EvalEpisode> episodes(n);
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](int i) {
    try {
      std::unique_ptr<Actor> actor = bob();
      episodes[i] = RunEvalEpisode(grid, reward, game, *actor, task,
                                   DeriveSeed(options.seed, i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (options.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) run(i);
  } else {
    for (int i = 0; i < n; ++i) run(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvalReport report;
  report.task = task.name;
  report.episodes = n;
  report.goals_at_index.assign(task.goals_per_episode, 0);
  report.successes_at_index.assign(task.goals_per_episode, 0);
  for (const EvalEpisode& ep : episodes) {
    for (std::size_t k = 0; k < ep.outcomes.size(); ++k) {
      ++report.goals_at_index[k];
      report.successes_at_index[k] += ep.outcomes[k];
      ++report.total_goals;
      report.total_successes += ep.outcomes[k];
    }
  }
  report.success_rate =
      static_cast<double>(report.total_successes) / report.total_goals;
  report.ci = WilsonInterval(report.total_successes, report.total_goals);
  return report;
}

EvalReport Evaluate(const GridConfig& grid, const RewardParams& reward,
                    const GameConfig& game, const ParamVector& bob,
                    const HoldoutTask& task, const EvalOptions& options) {
  const ActorFactory factory = [&bob] {
    return std::make_unique<NetworkActor>(bob);
  };
  return Evaluate(grid, reward, game, factory, task, options);
}

std::optional<double> CrossPlayRate(const GameSetup& setup,
                                    const ActorFactory& alice,
                                    const ActorFactory& bob, int episodes,
                                    std::uint64_t seed, bool parallel) {
  GameSetup no_demos = setup;
  no_demos.abc.enabled = false;
  std::vector<std::pair<int, int>> counts(episodes);
  std::vector<std::exception_ptr> errors(episodes);
  auto run = [&](int i) {
    try {
      auto a = alice();
      auto b = bob();
      const EpisodeRecord ep = PlayEpisode(no_demos, *a, *b, DeriveSeed(seed, i));
      counts[i] = {ep.TotalGoals(), ep.TotalSuccesses()};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < episodes; ++i) run(i);
  } else {
    for (int i = 0; i < episodes; ++i) run(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  int goals = 0, successes = 0;
  for (const auto& [g, s] : counts) {
    goals += g;
    successes += s;
  }
  if (goals == 0) return std::nullopt;
  return static_cast<double>(successes) / goals;
}

PayoffMatrix ComputePayoff(const GameSetup& setup,
                           const std::vector<Snapshot>& alices,
                           const std::vector<Snapshot>& bobs, int episodes,
                           std::uint64_t seed, bool parallel) {
  if (alices.empty() || bobs.empty()) {
    throw ConfigError("payoff matrix needs at least one checkpoint per side");
  }
  auto by_step = [](std::vector<Snapshot> v) {
    std::stable_sort(v.begin(), v.end(), [](const Snapshot& a, const Snapshot& b) {
      return a.step < b.step;
    });
    return v;
  };
  const std::vector<Snapshot> sorted_alices = by_step(alices);
  const std::vector<Snapshot> sorted_bobs = by_step(bobs);
  PayoffMatrix m;
  for (const Snapshot& a : sorted_alices) m.alice_steps.push_back(a.step);
  for (const Snapshot& b : sorted_bobs) m.bob_steps.push_back(b.step);
  m.rate.assign(alices.size(), std::vector<std::optional<double>>(bobs.size()));
  for (std::size_t i = 0; i < alices.size(); ++i) {
    for (std::size_t j = 0; j < bobs.size(); ++j) {
      const ParamVector& ap = sorted_alices[i].params;
      const ParamVector& bp = sorted_bobs[j].params;
      m.rate[i][j] = CrossPlayRate(
          setup, [&ap] { return std::make_unique<NetworkActor>(ap); },
          [&bp] { return std::make_unique<NetworkActor>(bp); }, episodes,
          DeriveSeed(seed, i), parallel);
    }
  }
  return m;
}

}  // namespace asp
