#include "asp/trainer.hpp"

#include <chrono>

#include "asp/errors.hpp"

namespace asp {

namespace {

double SecondsSince(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

void PoolConfig::Validate() const {
  if (capacity < 1) throw ConfigError("pool.capacity must be >= 1");
  if (snapshot_interval < 1) throw ConfigError("pool.snapshot_interval must be >= 1");
}

void TrainerConfig::Validate() const {
  setup.grid.Validate();
  setup.reward.Validate();
  setup.game.Validate(setup.grid);
  setup.abc.Validate();
  arch.Validate();
  ppo.Validate();
  pool.Validate();
  if (episodes_per_round < 1) throw ConfigError("episodes_per_round must be >= 1");
}

SelfPlayTrainer::SelfPlayTrainer(TrainerConfig config)
    : config_(std::move(config)),
      state_{InitParams(config_.arch, DeriveSeed(config_.seed, 1), config_.init),
             InitParams(config_.arch, DeriveSeed(config_.seed, 2), config_.init),
             {},
             {},
             OpponentPool(config_.pool.capacity),
             OpponentPool(config_.pool.capacity)} {
  config_.Validate();
  state_.alice_adam = AdamState::Zeros(state_.alice.values.size());
  state_.bob_adam = AdamState::Zeros(state_.bob.values.size());
}

SelfPlayTrainer::SelfPlayTrainer(TrainerConfig config, TrainingState state)
    : config_(std::move(config)), state_(std::move(state)) {
  config_.Validate();
  if (!(state_.alice.spec == config_.arch) || !(state_.bob.spec == config_.arch)) {
    throw ValidationError("training state architecture differs from config");
  }
}

RoundReport SelfPlayTrainer::Step() {
  const std::uint64_t round_seed = DeriveSeed(config_.seed, 1000 + state_.round);
  RoundReport report;

  // Snapshots for the round: the collectors only read these copies.
  const ParamVector alice_old = state_.alice;
  const ParamVector bob_old = state_.bob;

  auto t0 = std::chrono::steady_clock::now();
  CollectOptions opts;
  opts.episodes = config_.episodes_per_round;
  opts.parallel = config_.parallel;
  Rollouts rollouts =
      CollectRollouts(config_.setup, alice_old, bob_old, state_.alice_pool,
                      state_.bob_pool, DeriveSeed(round_seed, 0), opts);
  report.stats = rollouts.stats;
  Buffers buffers = Harvest(rollouts.episodes, config_.ppo,
                            config_.setup.abc.filter_failures);
  rollouts.episodes.clear();
  report.collect_seconds = SecondsSince(t0);
  report.alice_samples = buffers.alice.size();
  report.bob_samples = buffers.bob.size();
  report.demo_samples = buffers.demos.size();

  t0 = std::chrono::steady_clock::now();
  const std::uint64_t next_version = state_.round + 1;
  if (!buffers.alice.empty()) {
    try {
      OptimizeResult r = Optimize(alice_old, state_.alice_adam, buffers.alice,
                                  nullptr, config_.ppo, config_.setup.abc,
                                  DeriveSeed(round_seed, 1), config_.parallel);
      state_.alice = std::move(r.params);
      state_.alice_adam = std::move(r.adam);
      report.alice = r.stats;
    } catch (const NumericError& e) {
      report.warnings.push_back(std::string("alice update skipped: ") + e.what());
    }
  }
  if (!buffers.bob.empty()) {
    const DemoBatch* bc = config_.setup.abc.enabled && !buffers.demos.empty()
                              ? &buffers.demos
                              : nullptr;
    try {
      OptimizeResult r = Optimize(bob_old, state_.bob_adam, buffers.bob, bc,
                                  config_.ppo, config_.setup.abc,
                                  DeriveSeed(round_seed, 2), config_.parallel);
      state_.bob = std::move(r.params);
      state_.bob_adam = std::move(r.adam);
      report.bob = r.stats;
    } catch (const NumericError& e) {
      report.warnings.push_back(std::string("bob update skipped: ") + e.what());
    }
  }
  state_.alice.version = next_version;
  state_.bob.version = next_version;
  report.optimize_seconds = SecondsSince(t0);

  const std::uint64_t interval = config_.pool.snapshot_interval;
  if (state_.alice_adam.step >= state_.alice_last_snapshot + interval) {
    state_.alice_pool.Add(state_.alice, state_.alice_adam.step);
    state_.alice_last_snapshot = state_.alice_adam.step;
  }
  if (state_.bob_adam.step >= state_.bob_last_snapshot + interval) {
    state_.bob_pool.Add(state_.bob, state_.bob_adam.step);
    state_.bob_last_snapshot = state_.bob_adam.step;
  }
  state_.round = next_version;
  report.round = state_.round;
  return report;
}

}  // namespace asp
