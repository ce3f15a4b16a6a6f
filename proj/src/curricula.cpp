#include "asp/curricula.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "asp/actor.hpp"
#include "asp/errors.hpp"

namespace asp {

std::string_view ToString(AdrParamName name) {
  switch (name) {
    case AdrParamName::kGoalDistanceRatio: return "goal_distance_ratio";
    case AdrParamName::kGoalRotationWeight: return "goal_rotation_weight";
    case AdrParamName::kPickupProba: return "pickup_proba";
    case AdrParamName::kStackProba: return "stack_proba";
  }
  return "unknown";
}

void AdrConfig::Validate() const {
  if (queue_length < 1) throw ConfigError("adr.queue_length must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("adr.threshold must be in [0, 1]");
  }
  if (!(increment_fraction > 0.0 && increment_fraction <= 1.0)) {
    throw ConfigError("adr.increment_fraction must be in (0, 1]");
  }
}

AdrParam AdrParam::Make(AdrParamName name, const AdrConfig& config) {
  config.Validate();
  AdrParam p;
  p.name = name;
  p.lo = 0.0;
  p.hi = name == AdrParamName::kPickupProba || name == AdrParamName::kStackProba
             ? 0.5
             : 1.0;
  p.queue_length = config.queue_length;
  p.threshold = config.threshold;
  p.increment = config.increment_fraction * (p.hi - p.lo);
  p.frozen = !config.enabled;
  p.current_max = p.frozen ? p.hi : p.lo;
  return p;
}

AdrParam FadrUpdate(AdrParam param, double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw ValidationError("FADR score must be in [0, 1]");
  }
  if (param.frozen || param.current_max >= param.hi) return param;
  param.scores.push_back(score);
  while (static_cast<int>(param.scores.size()) > param.queue_length) {
    param.scores.pop_front();
  }
  if (static_cast<int>(param.scores.size()) < param.queue_length) return param;
  const double mean =
      std::accumulate(param.scores.begin(), param.scores.end(), 0.0) /
      param.queue_length;
  if (mean > param.threshold) {
    param.current_max = std::min(param.hi, param.current_max + param.increment);
    // Snap accumulated rounding so the upper bound is reached exactly.
    if (param.hi - param.current_max < 1e-9 * (param.hi - param.lo)) {
      param.current_max = param.hi;
    }
    param.scores.clear();
  }
  return param;
}

std::string_view ToString(BaselineVariant v) {
  switch (v) {
    case BaselineVariant::kNoCurriculum: return "no_curriculum";
    case BaselineVariant::kDistance: return "distance";
    case BaselineVariant::kDistribution: return "distribution";
    case BaselineVariant::kFull: return "full";
  }
  return "unknown";
}

BaselineVariant ParseBaselineVariant(std::string_view text) {
  for (BaselineVariant v :
       {BaselineVariant::kNoCurriculum, BaselineVariant::kDistance,
        BaselineVariant::kDistribution, BaselineVariant::kFull}) {
    if (text == ToString(v)) return v;
  }
  throw ConfigError("unknown baseline variant '" + std::string(text) + "'");
}

std::vector<AdrParamName> ActiveParams(BaselineVariant v) {
  switch (v) {
    case BaselineVariant::kNoCurriculum: return {};
    case BaselineVariant::kDistance:
      return {AdrParamName::kGoalDistanceRatio,
              AdrParamName::kGoalRotationWeight};
    case BaselineVariant::kDistribution:
      return {AdrParamName::kPickupProba, AdrParamName::kStackProba};
    case BaselineVariant::kFull:
      return {AdrParamName::kGoalDistanceRatio,
              AdrParamName::kGoalRotationWeight, AdrParamName::kPickupProba,
              AdrParamName::kStackProba};
  }
  return {};
}

namespace {

// Nearest integer to from + (to - from) * ratio, ties toward `from`.
int Toward(int from, int to, double ratio) {
  const double d = (to - from) * ratio;
  const double mag = std::ceil(std::abs(d) - 0.5 - 1e-9);
  const int step = static_cast<int>(std::max(0.0, mag));
  return from + (d < 0 ? -step : step);
}

// Signed quarter turns from a to b in {-1, 0, 1, 2}.
int SignedTurns(int a, int b) {
  const int d = ((b - a) % kNumOrientations + kNumOrientations) %
                kNumOrientations;
  return d == 3 ? -1 : d;
}

bool ConsistentArrangement(const Goal& g) {
  int in_air = 0;
  for (std::size_t i = 0; i < g.targets.size(); ++i) {
    const ObjectPose& a = g.targets[i];
    if (a.in_air) {
      if (a.level != 1 || ++in_air > 1) return false;
      continue;
    }
    bool supported = a.level == 0;
    for (std::size_t j = 0; j < g.targets.size(); ++j) {
      const ObjectPose& b = g.targets[j];
      if (j == i || b.in_air || b.x != a.x || b.y != a.y) continue;
      if (b.level == a.level) return false;
      if (b.level == a.level - 1) supported = true;
    }
    if (!supported) return false;
  }
  return true;
}

}  // namespace

Goal CurriculumGoal(const WorldState& initial, const Goal& raw, double ratio) {
  if (raw.NumObjects() != initial.NumObjects()) {
    throw ValidationError("curriculum goal/state object-count mismatch");
  }
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ValidationError("goal_distance_ratio must be in [0, 1]");
  }
  if (ratio == 0.0) return GoalFromState(initial, raw.source);
  if (ratio == 1.0) return raw;
  const int n = raw.NumObjects();
  Goal g = raw;
  for (int i = 0; i < n; ++i) {
    const ObjectPose from = PoseOf(initial, i);
    const ObjectPose& to = raw.targets[i];
    ObjectPose& t = g.targets[i];
    t.x = Toward(from.x, to.x, ratio);
    t.y = Toward(from.y, to.y, ratio);
    t.level = Toward(from.level, to.level, ratio);
    t.in_air = Toward(from.in_air, to.in_air, ratio) != 0;
    const int turns = Toward(0, SignedTurns(from.orientation, to.orientation),
                             ratio);
    t.orientation = ((from.orientation + turns) % kNumOrientations +
                     kNumOrientations) %
                    kNumOrientations;
  }
  // Raised resting targets follow whatever they stand on in the raw goal,
  // lowest level first.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return raw.targets[a].level < raw.targets[b].level;
  });
  for (int i : order) {
    ObjectPose& t = g.targets[i];
    if (t.in_air || t.level == 0) continue;
    const ObjectPose& ri = raw.targets[i];
    for (int j = 0; j < n; ++j) {
      const ObjectPose& rj = raw.targets[j];
      if (j != i && !rj.in_air && rj.x == ri.x && rj.y == ri.y &&
          rj.level == ri.level - 1) {
        t.x = g.targets[j].x;
        t.y = g.targets[j].y;
        break;
      }
    }
  }
  return ConsistentArrangement(g) ? g : raw;
}

GoalMatcher CurriculumMatcher(const GridConfig& grid, const RewardParams& reward,
                              double rotation_weight) {
  if (!(rotation_weight >= 0.0)) {
    throw ValidationError("goal_rotation_weight must be >= 0");
  }
  GoalMatcher m = GoalMatcher::For(grid, reward);
  m.rotation_weight = rotation_weight;
  return m;
}

MixtureSample SampleMixtureGoal(const GridConfig& grid, const GameConfig& game,
                                const CurriculumValues& values, Rng& rng) {
  const MixtureWeights fixed;
  const double p_pick = values.pickup_proba.value_or(fixed.pick_and_place);
  const double p_stack = values.stack_proba.value_or(fixed.stack);
  if (!(p_pick >= 0.0 && p_stack >= 0.0 && p_pick + p_stack <= 1.0)) {
    throw ValidationError("mixture probabilities must lie in the simplex");
  }
  MixtureSample s;
  const double u = UniformUnit(rng);
  if (u < p_pick) {
    s.kind = HoldoutKind::kPickAndPlace;
  } else if (u < p_pick + p_stack) {
    s.kind = HoldoutKind::kStack;
  } else {
    s.kind = Bernoulli(rng, 0.5) ? HoldoutKind::kPush : HoldoutKind::kFlip;
  }
  HoldoutTask task;
  task.kind = s.kind;
  task.goals_per_episode = 1;
  if (s.kind == HoldoutKind::kStack) {
    if (game.max_objects < 2) {
      throw ConfigError("stack goals need game.max_objects >= 2");
    }
    task.n_objects = 2;
  } else {
    task.n_objects =
        game.min_objects + UniformInt(rng, game.max_objects - game.min_objects + 1);
  }
  s.initial = SampleInitialState(grid, task.n_objects, rng);
  s.raw = GenerateGoal(grid, task, s.initial, rng);
  return s;
}

void BaselineConfig::Validate() const {
  grid.Validate();
  reward.Validate();
  game.Validate(grid);
  arch.Validate();
  ppo.Validate();
  adr.Validate();
  if (episodes_per_round < 1) throw ConfigError("episodes_per_round must be >= 1");
  if (game.max_objects < 2) {
    throw ConfigError("baseline mixture contains stack-2 goals; "
                      "game.max_objects must be >= 2");
  }
}

namespace {

std::vector<AdrParam> InitialAdr(const BaselineConfig& config) {
  std::vector<AdrParam> adr;
  for (AdrParamName name : ActiveParams(config.variant)) {
    adr.push_back(AdrParam::Make(name, config.adr));
  }
  return adr;
}

struct BaselineEpisode {
  HoldoutKind kind = HoldoutKind::kPush;
  int boundary = -1;  // index into the ADR list, -1 when none
  bool trivial = false;
  bool success = false;
  Trajectory trajectory;
};

BaselineEpisode RunBaselineEpisode(const BaselineConfig& config,
                                   const std::vector<AdrParam>& adr,
                                   const ParamVector& policy,
                                   std::uint64_t seed) {
  Rng rng = MakeRng(seed);
  BaselineEpisode ep;
  CurriculumValues values;
  if (!adr.empty()) {
    ep.boundary = UniformInt(rng, static_cast<int>(adr.size()));
    for (int k = 0; k < static_cast<int>(adr.size()); ++k) {
      const AdrParam& p = adr[k];
      const double v = k == ep.boundary
                           ? p.current_max
                           : p.lo + (p.current_max - p.lo) * UniformUnit(rng);
      switch (p.name) {
        case AdrParamName::kGoalDistanceRatio: values.distance_ratio = v; break;
        case AdrParamName::kGoalRotationWeight: values.rotation_weight = v; break;
        case AdrParamName::kPickupProba: values.pickup_proba = v; break;
        case AdrParamName::kStackProba: values.stack_proba = v; break;
      }
    }
    // The distribution parameters come as a pair.
    if (values.pickup_proba && !values.stack_proba) values.stack_proba = 0.0;
    if (values.stack_proba && !values.pickup_proba) values.pickup_proba = 0.0;
  }
  const MixtureSample sample =
      SampleMixtureGoal(config.grid, config.game, values, rng);
  ep.kind = sample.kind;
  const Goal goal =
      CurriculumGoal(sample.initial, sample.raw, values.distance_ratio);
  const GoalMatcher matcher =
      CurriculumMatcher(config.grid, config.reward, values.rotation_weight);
  if (matcher.GoalAchieved(sample.initial, goal)) {
    ep.trivial = true;
    ep.success = true;
    return ep;
  }
  NetworkActor actor(policy);
  BobTurn turn = RunBobTurn(config.grid, sample.initial, goal, actor,
                            config.game.BobMaxSteps(sample.initial.NumObjects()),
                            matcher, config.reward, rng);
  ep.success = turn.success;
  ep.trajectory = std::move(turn.trajectory);
  return ep;
}

}  // namespace

BaselineTrainer::BaselineTrainer(BaselineConfig config)
    : config_(std::move(config)) {
  config_.Validate();
  state_.policy = InitParams(config_.arch, DeriveSeed(config_.seed, 2),
                             config_.init);
  state_.adam = AdamState::Zeros(state_.policy.values.size());
  state_.adr = InitialAdr(config_);
}

BaselineTrainer::BaselineTrainer(BaselineConfig config, BaselineState state)
    : config_(std::move(config)), state_(std::move(state)) {
  config_.Validate();
  if (!(state_.policy.spec == config_.arch)) {
    throw ValidationError("baseline state architecture differs from config");
  }
  const auto names = ActiveParams(config_.variant);
  if (state_.adr.size() != names.size()) {
    throw ValidationError("baseline state ADR parameters differ from variant");
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (state_.adr[k].name != names[k]) {
      throw ValidationError("baseline state ADR parameters differ from variant");
    }
  }
}

BaselineReport BaselineTrainer::Step() {
  const std::uint64_t round_seed = DeriveSeed(config_.seed, 1000 + state_.round);
  const std::uint64_t collect_seed = DeriveSeed(round_seed, 0);
  const ParamVector policy = state_.policy;
  const int n = config_.episodes_per_round;
  std::vector<BaselineEpisode> episodes(n);
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](int i) {
    try {
      episodes[i] = RunBaselineEpisode(config_, state_.adr, policy,
                                       DeriveSeed(collect_seed, i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (config_.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) run(i);
  } else {
    for (int i = 0; i < n; ++i) run(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  BaselineReport report;
  report.episodes = n;
  TransitionBatch batch;
  for (const BaselineEpisode& ep : episodes) {
    const int k = static_cast<int>(ep.kind);
    ++report.attempts[k];
    report.successes[k] += ep.success;
    report.trivial_goals += ep.trivial;
    if (!ep.trajectory.empty()) {
      const Trajectory* one[] = {&ep.trajectory};
      AppendTrajectories(one, config_.ppo, batch);
    }
  }
  report.samples = batch.size();

  if (!batch.empty()) {
    AbcParams no_abc;
    no_abc.enabled = false;
    try {
      OptimizeResult r = Optimize(policy, state_.adam, batch, nullptr,
                                  config_.ppo, no_abc, DeriveSeed(round_seed, 1),
                                  config_.parallel);
      state_.policy = std::move(r.params);
      state_.adam = std::move(r.adam);
      report.update = r.stats;
    } catch (const NumericError& e) {
      report.warnings.push_back(std::string("policy update skipped: ") + e.what());
    }
  }
  for (const BaselineEpisode& ep : episodes) {
    if (ep.boundary < 0) continue;
    state_.adr[ep.boundary] =
        FadrUpdate(std::move(state_.adr[ep.boundary]), ep.success ? 1.0 : 0.0);
  }
  ++state_.round;
  state_.policy.version = state_.round;
  report.round = state_.round;
  report.adr = state_.adr;
  return report;
}

}  // namespace asp
