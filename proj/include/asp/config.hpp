#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "asp/abc.hpp"
#include "asp/curricula.hpp"
#include "asp/env.hpp"
#include "asp/goal_rules.hpp"
#include "asp/policy_net.hpp"
#include "asp/ppo.hpp"
#include "asp/selfplay.hpp"
#include "asp/trainer.hpp"

namespace asp {

struct TrainingSection {
  int episodes_per_round = 32;
  int rounds = 200;
  int checkpoint_interval = 10;  // rounds

  bool operator==(const TrainingSection&) const = default;
};

struct EvalSection {
  int interval = 10;  // rounds; 0 disables evaluation during training
  int episodes = 50;
  int goals_per_episode = 5;
  std::vector<std::string> tasks = {"push-1", "flip-1", "pick-and-place-1"};
  std::uint64_t seed = 12345;

  bool operator==(const EvalSection&) const = default;
};

struct BaselineSection {
  BaselineVariant variant = BaselineVariant::kNoCurriculum;
  AdrConfig adr;

  bool operator==(const BaselineSection&) const = default;
};

// Everything a run needs. Saved configs list every field, so a saved file
// reproduces the run on its own.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "runs/default";
  int workers = 0;  // OpenMP threads; 0 keeps the runtime default

  GridConfig grid;
  RewardParams reward;
  GameConfig game;
  ArchitectureSpec network;
  InitOptions init;
  PpoHyperParams ppo;
  AbcParams abc;
  PoolConfig pool;
  TrainingSection training;
  EvalSection eval;
  BaselineSection baseline;

  // Throws ConfigError naming the first bad field.
  void Validate() const;
  TrainerConfig ToTrainerConfig() const;
  BaselineConfig ToBaselineConfig() const;
  bool operator==(const RunConfig&) const = default;
};

// Pretty-printed JSON with every field present.
std::string ConfigToJson(const RunConfig& config);

// Parses and validates. Unknown keys, wrong types and malformed JSON raise
// ConfigError as "<source>:<line>: <message>".
RunConfig ParseConfig(std::string_view text, std::string_view source = "config");
RunConfig LoadConfig(const std::filesystem::path& path);
void SaveConfig(const std::filesystem::path& path, const RunConfig& config);

// FNV-1a of the canonical JSON text.
std::uint64_t ConfigHash(const RunConfig& config);
std::uint64_t Fnv1a(std::string_view bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

// Known names: no-abc, no-bc-clip, no-demo-filter, single-goal. Throws
// ConfigError otherwise.
void ApplyAblation(RunConfig& config, std::string_view name);
const std::vector<std::string>& AblationNames();

}  // namespace asp
