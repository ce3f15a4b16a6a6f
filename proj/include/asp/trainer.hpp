#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asp/policy_net.hpp"
#include "asp/ppo.hpp"
#include "asp/selfplay.hpp"

namespace asp {

struct PoolConfig {
  std::size_t capacity = 20;
  // Optimizer (minibatch) steps between snapshots of each agent.
  std::uint64_t snapshot_interval = 50;

  void Validate() const;
  bool operator==(const PoolConfig&) const = default;
};

struct TrainerConfig {
  GameSetup setup;
  ArchitectureSpec arch;
  InitOptions init;
  PpoHyperParams ppo;
  PoolConfig pool;
  int episodes_per_round = 32;
  std::uint64_t seed = 1;
  bool parallel = true;

  void Validate() const;
};

// Everything needed to continue training bit-for-bit.
struct TrainingState {
  ParamVector alice;
  ParamVector bob;
  AdamState alice_adam;
  AdamState bob_adam;
  OpponentPool alice_pool;
  OpponentPool bob_pool;
  std::uint64_t round = 0;
  std::uint64_t alice_last_snapshot = 0;
  std::uint64_t bob_last_snapshot = 0;
};

struct RoundReport {
  std::uint64_t round = 0;  // rounds completed after this one
  RoundStats stats;
  std::optional<UpdateStats> alice;
  std::optional<UpdateStats> bob;
  std::size_t alice_samples = 0;
  std::size_t bob_samples = 0;
  std::size_t demo_samples = 0;
  std::vector<std::string> warnings;
  double collect_seconds = 0.0;
  double optimize_seconds = 0.0;
};

// One round: snapshot both agents, collect, optimize Alice with PPO and Bob
// with PPO plus ABC, then refresh the opponent pools.
class SelfPlayTrainer {
 public:
  explicit SelfPlayTrainer(TrainerConfig config);
  SelfPlayTrainer(TrainerConfig config, TrainingState state);

  RoundReport Step();

  const TrainingState& state() const { return state_; }
  const TrainerConfig& config() const { return config_; }

 private:
  TrainerConfig config_;
  TrainingState state_;
};

}  // namespace asp
