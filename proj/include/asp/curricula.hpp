#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asp/env.hpp"
#include "asp/goal_rules.hpp"
#include "asp/holdout.hpp"
#include "asp/policy_net.hpp"
#include "asp/ppo.hpp"
#include "asp/selfplay.hpp"

namespace asp {

enum class AdrParamName : std::uint8_t {
  kGoalDistanceRatio,
  kGoalRotationWeight,
  kPickupProba,
  kStackProba,
};
std::string_view ToString(AdrParamName name);

struct AdrConfig {
  int queue_length = 40;
  double threshold = 0.7;           // promotion needs mean > threshold
  double increment_fraction = 0.1;  // of (hi - lo)
  // false pins every parameter at its upper bound.
  bool enabled = true;

  void Validate() const;
  bool operator==(const AdrConfig&) const = default;
};

// One FADR-controlled parameter. Values are drawn from [lo, current_max].
struct AdrParam {
  AdrParamName name = AdrParamName::kGoalDistanceRatio;
  double lo = 0.0;
  double hi = 1.0;
  double current_max = 0.0;
  std::deque<double> scores;
  int queue_length = 40;
  double threshold = 0.7;
  double increment = 0.1;
  bool frozen = false;

  // Bounds: [0, 1] for distance and rotation, [0, 0.5] for probabilities.
  static AdrParam Make(AdrParamName name, const AdrConfig& config);
  bool operator==(const AdrParam&) const = default;
};

// Pushes `score` (in [0, 1], else ValidationError); once the queue is full
// and its mean exceeds the threshold, raises current_max by one increment
// (capped at hi) and clears the queue.
AdrParam FadrUpdate(AdrParam param, double score);

enum class BaselineVariant : std::uint8_t {
  kNoCurriculum,
  kDistance,
  kDistribution,
  kFull,
};
std::string_view ToString(BaselineVariant v);
// Accepts no_curriculum, distance, distribution, full; else ConfigError.
BaselineVariant ParseBaselineVariant(std::string_view text);

// Parameters a variant grows, in a fixed order.
std::vector<AdrParamName> ActiveParams(BaselineVariant v);

// Goal mixture used when a probability is not under curriculum control.
struct MixtureWeights {
  double push_flip = 0.5;
  double pick_and_place = 0.35;
  double stack = 0.15;
};

// Concrete curriculum values for one episode. Defaults reproduce the raw
// fixed mixture.
struct CurriculumValues {
  double distance_ratio = 1.0;
  double rotation_weight = 1.0;
  std::optional<double> pickup_proba;  // unset: fixed mixture
  std::optional<double> stack_proba;
};

// Moves each target's cell, height (level and in-air flag) and orientation
// from the object's initial pose toward `raw` by `ratio`, rounding to the
// nearest value with ties toward the initial one. A raised resting target then
// sits on the interpolated cell of the target beneath it in `raw`. Falls back
// to `raw` when the result is not a consistent arrangement.
Goal CurriculumGoal(const WorldState& initial, const Goal& raw, double ratio);

// Matcher whose rotation term is scaled by `rotation_weight`.
GoalMatcher CurriculumMatcher(const GridConfig& grid, const RewardParams& reward,
                              double rotation_weight);

struct MixtureSample {
  WorldState initial;
  Goal raw;  // holdout-generator goal before interpolation
  HoldoutKind kind = HoldoutKind::kPush;
};

// Draws the goal kind (pickup / stack probabilities when set, else the fixed
// mixture; the rest splits evenly between push and flip), an initial state
// and a raw goal. Stack goals use two objects, others a uniform count in
// [game.min_objects, game.max_objects].
MixtureSample SampleMixtureGoal(const GridConfig& grid, const GameConfig& game,
                                const CurriculumValues& values, Rng& rng);

struct BaselineConfig {
  BaselineVariant variant = BaselineVariant::kNoCurriculum;
  GridConfig grid;
  RewardParams reward;
  GameConfig game;
  ArchitectureSpec arch;
  InitOptions init;
  PpoHyperParams ppo;
  AdrConfig adr;
  int episodes_per_round = 32;
  std::uint64_t seed = 1;
  bool parallel = true;

  // Requires game.max_objects >= 2 (the mixture contains stack goals).
  void Validate() const;
};

struct BaselineState {
  ParamVector policy;
  AdamState adam;
  std::vector<AdrParam> adr;  // ActiveParams order
  std::uint64_t round = 0;
};

struct BaselineReport {
  std::uint64_t round = 0;
  int episodes = 0;
  int trivial_goals = 0;  // satisfied before Bob acted
  std::array<int, 4> attempts{};   // by HoldoutKind
  std::array<int, 4> successes{};
  std::vector<AdrParam> adr;
  std::optional<UpdateStats> update;
  std::size_t samples = 0;
  std::vector<std::string> warnings;
};

// Single goal-conditioned policy trained with PPO on the goal mixture. One
// goal per episode; each episode scores the parameter it pinned at its
// current maximum.
class BaselineTrainer {
 public:
  explicit BaselineTrainer(BaselineConfig config);
  BaselineTrainer(BaselineConfig config, BaselineState state);

  BaselineReport Step();

  const BaselineState& state() const { return state_; }
  const BaselineConfig& config() const { return config_; }

 private:
  BaselineConfig config_;
  BaselineState state_;
};

}  // namespace asp
