#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "asp/goal_rules.hpp"
#include "asp/observation.hpp"
#include "asp/policy_net.hpp"
#include "asp/trajectory.hpp"

namespace asp {

enum class BobOutcome : std::uint8_t { kSuccess, kFailure, kSkipped };
std::string_view ToString(BobOutcome outcome);

// Alice's trajectory relabeled as a goal-conditioned demonstration for Bob.
struct Demonstration {
  Goal goal;
  std::vector<Observation> observations;  // Bob layout, goal = final state
  std::vector<Action> actions;
  // Bob's behavior-policy log-likelihood of each demonstrated action.
  std::vector<double> bob_old_log_probs;
  // Observation of the terminal state (no action follows it).
  Observation terminal_observation;
  std::uint64_t bob_version = 0;
  // Bob's result on this goal, when known.
  BobOutcome outcome = BobOutcome::kFailure;

  std::size_t size() const { return actions.size(); }
};

enum class AbcClipMode : std::uint8_t {
  kAsWritten,  // -clip(r, 1-eps, 1+eps)
  kPpoMin,     // -min(r, clip(r, 1-eps, 1+eps))
  kUnclipped,  // -log pi(a|s,g): plain behavioral cloning (ablation)
};
std::string_view ToString(AbcClipMode mode);
AbcClipMode ParseAbcClipMode(std::string_view text);

struct AbcParams {
  bool enabled = true;
  double beta = 0.5;
  double clip_eps = 0.2;
  AbcClipMode clip_mode = AbcClipMode::kAsWritten;
  // false ingests demonstrations for solved goals too (ablation).
  bool filter_failures = true;

  void Validate() const;
  bool operator==(const AbcParams&) const = default;
};

// Only valid-class goals that Bob failed (or skipped after a failure) become
// demonstrations.
bool ShouldDemonstrate(GoalValidity validity, BobOutcome outcome);

// Re-observes every step of `alice` with `goal` and scores the demonstrated
// actions under Bob's behavior snapshot.
Demonstration Relabel(const GridConfig& config, const Trajectory& alice,
                      const WorldState& terminal_state, const Goal& goal,
                      const ParamVector& bob_old, const GoalMatcher& matcher);

// Same, scoring with an arbitrary behavior log-likelihood.
using LogProbFn = std::function<double(const Observation&, const Action&)>;
Demonstration Relabel(const GridConfig& config, const Trajectory& alice,
                      const WorldState& terminal_state, const Goal& goal,
                      const LogProbFn& bob_log_prob, std::uint64_t bob_version,
                      const GoalMatcher& matcher);

// Flattened demonstration steps consumed by the optimizer.
struct DemoBatch {
  std::vector<Observation> observations;
  std::vector<Action> actions;
  std::vector<double> old_log_probs;

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
  void Append(const Demonstration& demo);
  void Append(const DemoBatch& other);
};

// One sample's ABC loss and its derivative with respect to log pi(a|s,g).
struct AbcTerm {
  double loss = 0.0;
  double dloss_dlogprob = 0.0;
};
AbcTerm AbcSampleTerm(double new_log_prob, double old_log_prob,
                      const AbcParams& params);

// Mean ABC loss of `batch` under `bob`. Throws ValidationError when empty.
double AbcLoss(const DemoBatch& batch, const ParamVector& bob,
               const AbcParams& params);

// rl + beta * abc, or rl alone when no ABC batch is present.
double CombinedBobLoss(double rl_loss, std::optional<double> abc_loss,
                       double beta);

}  // namespace asp
