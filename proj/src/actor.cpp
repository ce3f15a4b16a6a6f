#include "asp/actor.hpp"

#include <cmath>
#include <limits>

namespace asp {

Decision NetworkActor::Act(const ActorView& view, Rng& rng) {
  const PolicyOutput out = Forward(*params_, view.observation, cache_);
  const SampledAction s = SampleAction(out, rng);
  return Decision{s.action, s.log_prob, out.value};
}

double NetworkActor::LogProb(const Observation& obs, const Action& action) {
  return LogProbAndEntropy(Forward(*params_, obs, cache_), action).log_prob;
}

Decision UniformRandomActor::Act(const ActorView&, Rng& rng) {
  return Decision{Action::FromIndex(UniformInt(rng, kNumActions)),
                  -std::log(static_cast<double>(kNumActions)), 0.0};
}

double UniformRandomActor::LogProb(const Observation&, const Action&) {
  return -std::log(static_cast<double>(kNumActions));
}

Decision FixedActor::Act(const ActorView&, Rng&) {
  return Decision{action_, 0.0, 0.0};
}

double FixedActor::LogProb(const Observation&, const Action& action) {
  return action == action_ ? 0.0 : -std::numeric_limits<double>::infinity();
}

}  // namespace asp
