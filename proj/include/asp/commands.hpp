#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "asp/checkpoint.hpp"
#include "asp/config.hpp"
#include "asp/holdout.hpp"

namespace asp {

inline constexpr const char* kOutputDirEnv = "ASP_OUTPUT_DIR";

// Files of one training run.
struct RunLayout {
  std::filesystem::path root;
  std::filesystem::path config;       // resolved config.json
  std::filesystem::path metrics;      // metrics.jsonl
  std::filesystem::path checkpoints;  // ckpt-*.bin and manifests

  static RunLayout At(const std::filesystem::path& root);
};

// $ASP_OUTPUT_DIR when set and non-empty, otherwise `configured`.
std::filesystem::path ResolveOutputDir(const std::filesystem::path& configured);

// Sets the OpenMP thread count when workers > 0.
void ApplyWorkers(int workers);

struct TrainOptions {
  std::filesystem::path config_path;
  // Total rounds to reach; defaults to training.rounds.
  std::optional<std::uint64_t> steps;
  bool resume = false;
  std::vector<std::string> ablations;
  // Baseline command only: overrides baseline.variant.
  std::optional<std::string> variant;
};

struct TrainResult {
  std::filesystem::path output_dir;
  std::uint64_t start_round = 0;
  std::uint64_t final_round = 0;
  std::size_t metrics_written = 0;
  std::vector<std::filesystem::path> checkpoints;
};

// Self-play training. Checkpoints land every training.checkpoint_interval
// rounds and after the last round; holdout evaluation runs every
// eval.interval rounds. With `resume`, training continues from the latest
// checkpoint and metrics past it are dropped. Throws ConfigError for a bad
// config, or when the output directory already holds checkpoints and
// `resume` is off.
TrainResult RunTrain(const TrainOptions& options, std::ostream& log);

// Curriculum baseline training; same layout and resume rules as RunTrain.
TrainResult RunBaseline(const TrainOptions& options, std::ostream& log);

// "all", a comma-separated task list, or empty for `fallback`.
std::vector<std::string> ParseSuite(const std::string& suite,
                                    const std::vector<std::string>& fallback);

// Evaluates `bob` on each task. The grid's object cap is raised to fit the
// largest task.
std::vector<EvalReport> EvaluateSuite(const RunConfig& config,
                                      const ActorFactory& bob,
                                      const std::vector<std::string>& tasks,
                                      int episodes, std::uint64_t seed);

struct EvalCommandOptions {
  std::filesystem::path checkpoint;
  std::string suite;
  std::optional<int> episodes;
  std::optional<std::uint64_t> seed;
  // Results JSON; defaults to <checkpoint stem>.eval.json next to it.
  std::optional<std::filesystem::path> output;
  // Appends success rates to the metrics log of the checkpoint's run.
  bool append_metrics = false;
};

struct EvalCommandResult {
  std::vector<EvalReport> reports;
  std::filesystem::path output;
};

EvalCommandResult RunEvalCommand(const EvalCommandOptions& options,
                                 std::ostream& out);

std::string EvalReportsToJson(const std::vector<EvalReport>& reports,
                              const Checkpoint& checkpoint,
                              std::uint64_t seed);

struct PayoffCommandOptions {
  std::vector<std::filesystem::path> alice;
  std::vector<std::filesystem::path> bob;
  int episodes = 20;
  std::optional<std::uint64_t> seed;
  // Writes <output>.json and <output>.svg.
  std::filesystem::path output = "payoff";
};

// Throws ValidationError when the checkpoints disagree on the game setup.
PayoffMatrix RunPayoffCommand(const PayoffCommandOptions& options,
                              std::ostream& out);

struct ReportRow {
  std::string run;
  std::string task;
  std::uint64_t step = 0;
  int successes = 0;
  int goals = 0;
  double rate = 0.0;
  Interval ci;
};

struct ReportOptions {
  std::filesystem::path run;
  std::vector<std::filesystem::path> compare;
  // Defaults to <run>/report.
  std::optional<std::filesystem::path> output;
};

struct ReportResult {
  std::vector<ReportRow> rows;  // final evaluation per run and task
  std::vector<std::filesystem::path> charts;
  std::filesystem::path summary;
};

// Success-rate curves per task (one series per run) and a summary table with
// 99% Wilson intervals. An empty log warns on `err` and yields an empty
// report.
ReportResult RunReport(const ReportOptions& options, std::ostream& out,
                       std::ostream& err);

}  // namespace asp
