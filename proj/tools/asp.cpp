// Command-line front end: train, baseline, eval, payoff, report.

#include <iostream>

#include "CLI11.hpp"
#include "asp/commands.hpp"
#include "asp/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymmetric self-play on a grid tabletop"};
  app.require_subcommand(1);

  asp::TrainOptions train;
  std::uint64_t train_steps = 0;
  auto* train_cmd = app.add_subcommand("train", "Self-play training");
  train_cmd->add_option("--config", train.config_path, "Run config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* train_steps_opt =
      train_cmd->add_option("--steps", train_steps, "Total rounds to reach");
  train_cmd->add_flag("--resume", train.resume, "Continue from the latest checkpoint");
  train_cmd->add_option("--ablate", train.ablations, "Disable a component")
      ->check(CLI::IsMember(asp::AblationNames()));

  asp::TrainOptions base;
  std::uint64_t base_steps = 0;
  std::string variant;
  auto* base_cmd = app.add_subcommand("baseline", "Curriculum baseline training");
  base_cmd->add_option("--config", base.config_path, "Run config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* base_variant_opt = base_cmd->add_option(
      "--variant", variant, "no_curriculum, distance, distribution or full");
  auto* base_steps_opt = base_cmd->add_option("--steps", base_steps, "Total rounds to reach");
  base_cmd->add_flag("--resume", base.resume, "Continue from the latest checkpoint");

  asp::EvalCommandOptions eval;
  int eval_episodes = 0;
  std::uint64_t eval_seed = 0;
  std::string eval_output;
  auto* eval_cmd = app.add_subcommand("eval", "Holdout evaluation of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--suite", eval.suite, "'all' or comma-separated task names");
  auto* eval_episodes_opt = eval_cmd->add_option("--episodes", eval_episodes, "Episodes per task");
  auto* eval_seed_opt = eval_cmd->add_option("--seed", eval_seed, "Evaluation seed");
  auto* eval_output_opt = eval_cmd->add_option("--output", eval_output, "Results JSON path");
  eval_cmd->add_flag("--append-metrics", eval.append_metrics,
                     "Append results to the run's metrics log");

  asp::PayoffCommandOptions payoff;
  std::uint64_t payoff_seed = 0;
  auto* payoff_cmd = app.add_subcommand("payoff", "Alice-vs-Bob payoff matrix");
  payoff_cmd->add_option("--alice", payoff.alice, "Alice checkpoints")
      ->required()
      ->check(CLI::ExistingFile);
  payoff_cmd->add_option("--bob", payoff.bob, "Bob checkpoints")
      ->required()
      ->check(CLI::ExistingFile);
  payoff_cmd->add_option("--episodes", payoff.episodes, "Episodes per pairing")
      ->check(CLI::PositiveNumber);
  auto* payoff_seed_opt = payoff_cmd->add_option("--seed", payoff_seed, "Seed");
  payoff_cmd->add_option("--output", payoff.output, "Output prefix for .json and .svg");

  asp::ReportOptions report;
  std::string report_output;
  auto* report_cmd = app.add_subcommand("report", "Success-rate curves and summary");
  report_cmd->add_option("run", report.run, "Run directory")->required();
  report_cmd->add_option("--compare", report.compare, "Runs to overlay");
  auto* report_output_opt =
      report_cmd->add_option("--output", report_output, "Report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) {
      if (*train_steps_opt) train.steps = train_steps;
      const auto r = asp::RunTrain(train, std::cout);
      std::cout << "trained rounds " << r.start_round << ".." << r.final_round << " in "
                << r.output_dir.string() << "\n";
    } else if (*base_cmd) {
      if (*base_steps_opt) base.steps = base_steps;
      if (*base_variant_opt) base.variant = variant;
      const auto r = asp::RunBaseline(base, std::cout);
      std::cout << "trained rounds " << r.start_round << ".." << r.final_round << " in "
                << r.output_dir.string() << "\n";
    } else if (*eval_cmd) {
      if (*eval_episodes_opt) eval.episodes = eval_episodes;
      if (*eval_seed_opt) eval.seed = eval_seed;
      if (*eval_output_opt) eval.output = eval_output;
      const auto r = asp::RunEvalCommand(eval, std::cout);
      std::cout << "wrote " << r.output.string() << "\n";
    } else if (*payoff_cmd) {
      if (*payoff_seed_opt) payoff.seed = payoff_seed;
      asp::RunPayoffCommand(payoff, std::cout);
    } else if (*report_cmd) {
      if (*report_output_opt) report.output = report_output;
      const auto r = asp::RunReport(report, std::cout, std::cerr);
      std::cout << "wrote " << r.summary.string() << "\n";
    }
  } catch (const asp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
