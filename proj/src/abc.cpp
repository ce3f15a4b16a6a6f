#include "asp/abc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asp/errors.hpp"

namespace asp {

std::string_view ToString(BobOutcome outcome) {
  switch (outcome) {
    case BobOutcome::kSuccess: return "success";
    case BobOutcome::kFailure: return "failure";
    case BobOutcome::kSkipped: return "skipped";
  }
  return "unknown";
}

std::string_view ToString(AbcClipMode mode) {
  switch (mode) {
    case AbcClipMode::kAsWritten: return "as_written";
    case AbcClipMode::kPpoMin: return "ppo_min";
    case AbcClipMode::kUnclipped: return "unclipped";
  }
  return "unknown";
}

AbcClipMode ParseAbcClipMode(std::string_view text) {
  if (text == "as_written") return AbcClipMode::kAsWritten;
  if (text == "ppo_min") return AbcClipMode::kPpoMin;
  if (text == "unclipped") return AbcClipMode::kUnclipped;
  throw ConfigError("unknown abc.clip_mode '" + std::string(text) + "'");
}

void AbcParams::Validate() const {
  if (!(beta >= 0.0)) throw ConfigError("abc.beta must be >= 0");
  if (!(clip_eps > 0.0)) throw ConfigError("abc.clip_eps must be > 0");
}

bool ShouldDemonstrate(GoalValidity validity, BobOutcome outcome) {
  return IsValidClass(validity) && outcome != BobOutcome::kSuccess;
}

Demonstration Relabel(const GridConfig& config, const Trajectory& alice,
                      const WorldState& terminal_state, const Goal& goal,
                      const LogProbFn& bob_log_prob, std::uint64_t bob_version,
                      const GoalMatcher& matcher) {
  if (alice.states.size() != alice.size()) {
    throw ValidationError("relabel needs one state per Alice step");
  }
  Demonstration demo;
  demo.goal = goal;
  demo.bob_version = bob_version;
  demo.actions = alice.actions;
  demo.observations.reserve(alice.size());
  demo.bob_old_log_probs.reserve(alice.size());
  for (std::size_t t = 0; t < alice.size(); ++t) {
    demo.observations.push_back(
        Observe(config, alice.states[t], goal, matcher));
    demo.bob_old_log_probs.push_back(
        bob_log_prob(demo.observations.back(), alice.actions[t]));
  }
  demo.terminal_observation = Observe(config, terminal_state, goal, matcher);
  return demo;
}

Demonstration Relabel(const GridConfig& config, const Trajectory& alice,
                      const WorldState& terminal_state, const Goal& goal,
                      const ParamVector& bob_old, const GoalMatcher& matcher) {
  ForwardCache cache;
  const LogProbFn log_prob = [&](const Observation& obs, const Action& a) {
    return LogProbAndEntropy(Forward(bob_old, obs, cache), a).log_prob;
  };
  return Relabel(config, alice, terminal_state, goal, log_prob,
                 bob_old.version, matcher);
}

void DemoBatch::Append(const Demonstration& demo) {
  observations.insert(observations.end(), demo.observations.begin(),
                      demo.observations.end());
  actions.insert(actions.end(), demo.actions.begin(), demo.actions.end());
  old_log_probs.insert(old_log_probs.end(), demo.bob_old_log_probs.begin(),
                       demo.bob_old_log_probs.end());
}

void DemoBatch::Append(const DemoBatch& other) {
  observations.insert(observations.end(), other.observations.begin(),
                      other.observations.end());
  actions.insert(actions.end(), other.actions.begin(), other.actions.end());
  old_log_probs.insert(old_log_probs.end(), other.old_log_probs.begin(),
                       other.old_log_probs.end());
}

AbcTerm AbcSampleTerm(double new_log_prob, double old_log_prob,
                      const AbcParams& params) {
  const double lo = 1.0 - params.clip_eps;
  const double hi = 1.0 + params.clip_eps;
  const double r = std::exp(new_log_prob - old_log_prob);
  const bool inside = r > lo && r < hi;
  AbcTerm term;
  switch (params.clip_mode) {
    case AbcClipMode::kAsWritten:
      term.loss = -std::clamp(r, lo, hi);
      term.dloss_dlogprob = inside ? -r : 0.0;
      break;
    case AbcClipMode::kPpoMin:
      term.loss = -std::min(r, std::clamp(r, lo, hi));
      term.dloss_dlogprob = r < hi ? -r : 0.0;
      break;
    case AbcClipMode::kUnclipped:
      term.loss = -new_log_prob;
      term.dloss_dlogprob = -1.0;
      break;
  }
  return term;
}

double AbcLoss(const DemoBatch& batch, const ParamVector& bob,
               const AbcParams& params) {
  if (batch.empty()) throw ValidationError("ABC loss needs a nonempty batch");
  ForwardCache cache;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const PolicyOutput out = Forward(bob, batch.observations[i], cache);
    const double lp = LogProbAndEntropy(out, batch.actions[i]).log_prob;
    total += AbcSampleTerm(lp, batch.old_log_probs[i], params).loss;
  }
  return total / static_cast<double>(batch.size());
}

double CombinedBobLoss(double rl_loss, std::optional<double> abc_loss,
                       double beta) {
  return abc_loss ? rl_loss + beta * *abc_loss : rl_loss;
}

}  // namespace asp
