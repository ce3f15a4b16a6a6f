#pragma once

#include <cstdint>
#include <vector>

#include "asp/env.hpp"
#include "asp/observation.hpp"

namespace asp {

// One agent's turn: the state and observation before each step, the action
// taken, the reward received after it, and the behavior policy's log-prob
// and value estimate.
struct Trajectory {
  std::vector<WorldState> states;
  std::vector<Observation> observations;
  std::vector<Action> actions;
  std::vector<double> rewards;
  std::vector<double> log_probs;
  std::vector<double> values;
  // Whether the last step ends the agent's episode (no bootstrap past it).
  bool terminal = true;
  // Version of the parameter snapshot that generated the trajectory.
  std::uint64_t policy_version = 0;

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
};

}  // namespace asp
