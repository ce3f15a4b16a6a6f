#pragma once

#include "asp/env.hpp"
#include "asp/goal_rules.hpp"
#include "asp/observation.hpp"
#include "asp/policy_net.hpp"
#include "asp/random.hpp"

namespace asp {

struct ActorView {
  const WorldState& state;
  const Observation& observation;
  const Goal* goal;  // null for Alice
};

struct Decision {
  Action action;
  double log_prob = 0.0;
  double value = 0.0;
};

// Chooses actions during rollouts. Instances are used by one worker at a time.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual Decision Act(const ActorView& view, Rng& rng) = 0;
  // Behavior log-likelihood of `action`, used to relabel demonstrations.
  virtual double LogProb(const Observation& obs, const Action& action) = 0;
  // Parameter snapshot version the actor samples from.
  virtual std::uint64_t version() const { return 0; }
};

// Samples from a policy network snapshot. Keeps a pointer; the snapshot must
// outlive the actor.
class NetworkActor : public Actor {
 public:
  explicit NetworkActor(const ParamVector& params) : params_(&params) {}
  Decision Act(const ActorView& view, Rng& rng) override;
  double LogProb(const Observation& obs, const Action& action) override;
  std::uint64_t version() const override { return params_->version; }
  const ParamVector& params() const { return *params_; }

 private:
  const ParamVector* params_;
  ForwardCache cache_;
};

// Uniform over all 60 actions.
class UniformRandomActor : public Actor {
 public:
  Decision Act(const ActorView& view, Rng& rng) override;
  double LogProb(const Observation& obs, const Action& action) override;
};

// Always emits the same action (stay/none/none by default).
class FixedActor : public Actor {
 public:
  explicit FixedActor(Action action = {}) : action_(action) {}
  Decision Act(const ActorView& view, Rng& rng) override;
  double LogProb(const Observation& obs, const Action& action) override;

 private:
  Action action_;
};

}  // namespace asp
