#include "asp/commands.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "asp/actor.hpp"
#include "asp/errors.hpp"
#include "asp/metrics.hpp"
#include "asp/random.hpp"
#include "asp/svg.hpp"
#include "json.hpp"

namespace asp {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kEvalAgent = "eval";

double Ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// Fields that may change between a run and its resumption.
RunConfig ResumeInvariantPart(RunConfig c) {
  c.output_dir.clear();
  c.workers = 0;
  c.training.rounds = 0;
  c.training.checkpoint_interval = 0;
  c.eval = EvalSection{};
  return c;
}

struct PreparedRun {
  RunConfig config;
  RunLayout layout;
  std::optional<Checkpoint> resumed;
  std::uint64_t target = 0;
};

PreparedRun Prepare(const TrainOptions& options, CheckpointKind kind,
                    std::ostream& log) {
  PreparedRun run;
  run.config = LoadConfig(options.config_path);
  for (const std::string& name : options.ablations) ApplyAblation(run.config, name);
  if (options.variant) run.config.baseline.variant = ParseBaselineVariant(*options.variant);
  run.config.output_dir = ResolveOutputDir(run.config.output_dir).string();
  run.config.Validate();
  if (kind == CheckpointKind::kBaseline) run.config.ToBaselineConfig().Validate();
  run.layout = RunLayout::At(run.config.output_dir);
  run.target = options.steps.value_or(
      static_cast<std::uint64_t>(run.config.training.rounds));

  const auto latest = LatestCheckpoint(run.layout.checkpoints);
  if (latest && !options.resume) {
    throw ConfigError(run.layout.root.string() +
                      " already holds checkpoints; pass --resume to continue");
  }
  if (latest) {
    Checkpoint c = ReadCheckpoint(*latest);
    if (c.kind != kind) {
      throw ConfigError("cannot resume a " + std::string(ToString(c.kind)) +
                        " run as " + std::string(ToString(kind)));
    }
    if (!(ResumeInvariantPart(c.config) == ResumeInvariantPart(run.config))) {
      throw ConfigError("config differs from the one stored in " + latest->string());
    }
    if (c.round() > run.target) {
      throw ConfigError("checkpoint is at round " + std::to_string(c.round()) +
                        ", past the requested " + std::to_string(run.target));
    }
    TruncateMetrics(run.layout.metrics, c.round());
    log << "resuming from " << latest->string() << " at round " << c.round() << "\n";
    run.resumed = std::move(c);
  } else {
    if (options.resume) log << "no checkpoint found; starting fresh\n";
    fs::create_directories(run.layout.root);
    fs::remove(run.layout.metrics);
  }
  SaveConfig(run.layout.config, run.config);
  ApplyWorkers(run.config.workers);
  return run;
}

bool EvalDue(const RunConfig& c, std::uint64_t round) {
  return c.eval.interval > 0 && round % static_cast<std::uint64_t>(c.eval.interval) == 0;
}

bool CheckpointDue(const RunConfig& c, std::uint64_t round, std::uint64_t target) {
  return round == target ||
         (c.training.checkpoint_interval > 0 &&
          round % static_cast<std::uint64_t>(c.training.checkpoint_interval) == 0);
}

void LogEval(MetricsWriter& metrics, std::uint64_t step,
             const std::vector<EvalReport>& reports, std::ostream& log) {
  for (const EvalReport& r : reports) {
    const std::string base = "holdout/" + r.task + "/";
    metrics.Write(step, kEvalAgent, base + "success_rate", r.success_rate);
    metrics.Write(step, kEvalAgent, base + "successes", r.total_successes);
    metrics.Write(step, kEvalAgent, base + "goals", r.total_goals);
    log << "  " << r.task << " " << r.total_successes << "/" << r.total_goals
        << " = " << r.success_rate << "\n";
  }
}

void RunEvalAt(const RunConfig& config, const ParamVector& bob, std::uint64_t step,
               MetricsWriter& metrics, std::ostream& log) {
  const ActorFactory factory = [&bob] { return std::make_unique<NetworkActor>(bob); };
  log << "eval at round " << step << "\n";
  LogEval(metrics, step,
          EvaluateSuite(config, factory, config.eval.tasks, config.eval.episodes,
                        config.eval.seed),
          log);
}

void LogUpdate(MetricsWriter& m, std::uint64_t step, const std::string& agent,
               const UpdateStats& u) {
  m.Write(step, agent, "policy_loss", u.policy_loss);
  m.Write(step, agent, "value_loss", u.value_loss);
  m.Write(step, agent, "entropy", u.entropy);
  m.Write(step, agent, "approx_kl", u.approx_kl);
  m.Write(step, agent, "clip_fraction", u.clip_fraction);
  m.Write(step, agent, "minibatch_updates", u.minibatch_updates);
}

void LogRound(MetricsWriter& m, const RoundReport& rep, std::ostream& log) {
  const RoundStats& s = rep.stats;
  const std::uint64_t t = rep.round;
  m.Write(t, "alice", "goals_set", s.goals_set);
  m.Write(t, "alice", "valid_rate", Ratio(s.valid_goals, s.goals_set));
  m.Write(t, "alice", "out_of_zone_rate", Ratio(s.out_of_zone_goals, s.goals_set));
  m.Write(t, "alice", "invalid_rate", Ratio(s.invalid_goals, s.goals_set));
  m.Write(t, "alice", "reward_per_episode", Ratio(s.alice_reward, s.episodes));
  m.Write(t, "alice", "samples", static_cast<double>(rep.alice_samples));
  if (rep.alice) LogUpdate(m, t, "alice", *rep.alice);
  m.Write(t, "bob", "success_rate", Ratio(s.bob_successes, s.bob_attempts));
  m.Write(t, "bob", "attempts", s.bob_attempts);
  m.Write(t, "bob", "skipped_goals", s.skipped_goals);
  m.Write(t, "bob", "demonstrations", s.demonstrations);
  m.Write(t, "bob", "samples", static_cast<double>(rep.bob_samples));
  m.Write(t, "bob", "demo_samples", static_cast<double>(rep.demo_samples));
  if (rep.bob) {
    LogUpdate(m, t, "bob", *rep.bob);
    m.Write(t, "bob", "abc_loss", rep.bob->abc_loss);
  }
  m.Write(t, "round", "past_alice_games", s.past_alice_games);
  m.Write(t, "round", "past_bob_games", s.past_bob_games);
  m.Write(t, "round", "retried_episodes", s.retried_episodes);
  m.Write(t, "round", "collect_seconds", rep.collect_seconds);
  m.Write(t, "round", "optimize_seconds", rep.optimize_seconds);
  log << "round " << t << ": goals " << s.valid_goals << "/" << s.goals_set
      << " valid, bob " << s.bob_successes << "/" << s.bob_attempts
      << ", demos " << s.demonstrations << "\n";
  for (const std::string& w : rep.warnings) log << "warning: " << w << "\n";
}

void LogBaselineRound(MetricsWriter& m, const BaselineReport& rep, std::ostream& log) {
  const std::uint64_t t = rep.round;
  m.Write(t, "baseline", "episodes", rep.episodes);
  m.Write(t, "baseline", "trivial_goals", rep.trivial_goals);
  m.Write(t, "baseline", "samples", static_cast<double>(rep.samples));
  int attempts = 0, successes = 0;
  for (int k = 0; k < 4; ++k) {
    attempts += rep.attempts[static_cast<std::size_t>(k)];
    successes += rep.successes[static_cast<std::size_t>(k)];
  }
  m.Write(t, "baseline", "success_rate", Ratio(successes, attempts));
  static constexpr const char* kKinds[] = {"push", "flip", "pick-and-place", "stack"};
  for (std::size_t k = 0; k < 4; ++k) {
    if (rep.attempts[k] == 0) continue;
    m.Write(t, "baseline", std::string("success_rate/") + kKinds[k],
            Ratio(rep.successes[k], rep.attempts[k]));
  }
  for (const AdrParam& p : rep.adr) {
    m.Write(t, "baseline", "adr/" + std::string(ToString(p.name)), p.current_max);
  }
  if (rep.update) LogUpdate(m, t, "baseline", *rep.update);
  log << "round " << t << ": success " << successes << "/" << attempts
      << ", trivial " << rep.trivial_goals << "\n";
  for (const std::string& w : rep.warnings) log << "warning: " << w << "\n";
}

// Checkpoints do not record where they were written, so identical runs in
// different directories produce identical files.
RunConfig StoredConfig(RunConfig c) {
  c.output_dir.clear();
  return c;
}

std::string Label(std::uint64_t step) { return std::to_string(step); }

}  // namespace

RunLayout RunLayout::At(const fs::path& root) {
  return {root, root / "config.json", root / "metrics.jsonl", root / "checkpoints"};
}

fs::path ResolveOutputDir(const fs::path& configured) {
  const char* env = std::getenv(kOutputDirEnv);
  if (env != nullptr && *env != '\0') return fs::path(env);
  return configured;
}

void ApplyWorkers(int workers) {
  if (workers > 0) omp_set_num_threads(workers);
}

TrainResult RunTrain(const TrainOptions& options, std::ostream& log) {
  PreparedRun run = Prepare(options, CheckpointKind::kSelfPlay, log);
  const RunConfig& config = run.config;
  SelfPlayTrainer trainer = run.resumed
                                ? SelfPlayTrainer(config.ToTrainerConfig(),
                                                  *run.resumed->selfplay)
                                : SelfPlayTrainer(config.ToTrainerConfig());
  MetricsWriter metrics(run.layout.metrics);
  TrainResult result;
  result.output_dir = run.layout.root;
  result.start_round = trainer.state().round;

  const auto save = [&] {
    Checkpoint c{CheckpointKind::kSelfPlay, StoredConfig(config), trainer.state(), std::nullopt};
    result.checkpoints.push_back(WriteCheckpoint(run.layout.checkpoints, c).data);
  };
  if (result.start_round == run.target) save();
  while (trainer.state().round < run.target) {
    const RoundReport rep = trainer.Step();
    LogRound(metrics, rep, log);
    if (EvalDue(config, rep.round)) {
      RunEvalAt(config, trainer.state().bob, rep.round, metrics, log);
    }
    if (CheckpointDue(config, rep.round, run.target)) save();
  }
  result.final_round = trainer.state().round;
  result.metrics_written = metrics.records_written();
  return result;
}

TrainResult RunBaseline(const TrainOptions& options, std::ostream& log) {
  PreparedRun run = Prepare(options, CheckpointKind::kBaseline, log);
  const RunConfig& config = run.config;
  BaselineTrainer trainer =
      run.resumed ? BaselineTrainer(config.ToBaselineConfig(), *run.resumed->baseline)
                  : BaselineTrainer(config.ToBaselineConfig());
  MetricsWriter metrics(run.layout.metrics);
  TrainResult result;
  result.output_dir = run.layout.root;
  result.start_round = trainer.state().round;

  const auto save = [&] {
    Checkpoint c{CheckpointKind::kBaseline, StoredConfig(config), std::nullopt, trainer.state()};
    result.checkpoints.push_back(WriteCheckpoint(run.layout.checkpoints, c).data);
  };
  if (result.start_round == run.target) save();
  while (trainer.state().round < run.target) {
    const BaselineReport rep = trainer.Step();
    LogBaselineRound(metrics, rep, log);
    if (EvalDue(config, rep.round)) {
      RunEvalAt(config, trainer.state().policy, rep.round, metrics, log);
    }
    if (CheckpointDue(config, rep.round, run.target)) save();
  }
  result.final_round = trainer.state().round;
  result.metrics_written = metrics.records_written();
  return result;
}

std::vector<std::string> ParseSuite(const std::string& suite,
                                    const std::vector<std::string>& fallback) {
  if (suite.empty()) return fallback;
  if (suite == "all") return AllTaskNames();
  std::vector<std::string> tasks;
  std::stringstream ss(suite);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    MakeTask(name);
    tasks.push_back(name);
  }
  if (tasks.empty()) throw ConfigError("empty task suite");
  return tasks;
}

std::vector<EvalReport> EvaluateSuite(const RunConfig& config, const ActorFactory& bob,
                                      const std::vector<std::string>& tasks,
                                      int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  const auto& names = AllTaskNames();
  std::vector<EvalReport> reports;
  for (const std::string& name : tasks) {
    HoldoutTask task = MakeTask(name);
    task.goals_per_episode = config.eval.goals_per_episode;
    GridConfig grid = config.grid;
    grid.max_objects = std::max(grid.max_objects, task.n_objects);
    const auto index = static_cast<std::uint64_t>(
        std::find(names.begin(), names.end(), name) - names.begin());
    EvalOptions opts{episodes, DeriveSeed(seed, index), true};
    reports.push_back(Evaluate(grid, config.reward, config.game, bob, task, opts));
  }
  return reports;
}

std::string EvalReportsToJson(const std::vector<EvalReport>& reports,
                              const Checkpoint& checkpoint, std::uint64_t seed) {
  Json j;
  j["kind"] = std::string(ToString(checkpoint.kind));
  j["step"] = checkpoint.round();
  j["seed"] = seed;
  j["tasks"] = Json::array();
  for (const EvalReport& r : reports) {
    Json t;
    t["task"] = r.task;
    t["episodes"] = r.episodes;
    t["total_goals"] = r.total_goals;
    t["total_successes"] = r.total_successes;
    t["success_rate"] = r.success_rate;
    t["ci99"] = {r.ci.low, r.ci.high};
    t["goals_at_index"] = r.goals_at_index;
    t["successes_at_index"] = r.successes_at_index;
    j["tasks"].push_back(t);
  }
  return j.dump(2) + "\n";
}

EvalCommandResult RunEvalCommand(const EvalCommandOptions& options, std::ostream& out) {
  const Checkpoint ckpt = ReadCheckpoint(options.checkpoint);
  const RunConfig& config = ckpt.config;
  const ParamVector& bob = ckpt.solver();
  if (!(bob.spec == config.network)) {
    throw ValidationError("checkpoint parameters do not match its network config");
  }
  ApplyWorkers(config.workers);
  const auto tasks = ParseSuite(options.suite, config.eval.tasks);
  const int episodes = options.episodes.value_or(config.eval.episodes);
  const std::uint64_t seed = options.seed.value_or(config.eval.seed);
  const ActorFactory factory = [&bob] { return std::make_unique<NetworkActor>(bob); };

  EvalCommandResult result;
  result.reports = EvaluateSuite(config, factory, tasks, episodes, seed);
  for (const EvalReport& r : result.reports) {
    out << r.task << ": " << r.total_successes << "/" << r.total_goals << " = "
        << r.success_rate << " (99% CI " << r.ci.low << ".." << r.ci.high << ")\n";
  }
  fs::path path = options.output.value_or(
      options.checkpoint.parent_path() /
      (options.checkpoint.stem().string() + ".eval.json"));
  if (const char* env = std::getenv(kOutputDirEnv); env && *env && !options.output) {
    path = fs::path(env) / path.filename();
  }
  WriteText(path, EvalReportsToJson(result.reports, ckpt, seed));
  result.output = path;
  if (options.append_metrics) {
    const fs::path run_root = options.checkpoint.parent_path().parent_path();
    MetricsWriter metrics(RunLayout::At(run_root).metrics);
    std::ostringstream sink;
    LogEval(metrics, ckpt.round(), result.reports, sink);
  }
  return result;
}

PayoffMatrix RunPayoffCommand(const PayoffCommandOptions& options, std::ostream& out) {
  if (options.alice.empty() || options.bob.empty()) {
    throw ConfigError("payoff needs at least one Alice and one Bob checkpoint");
  }
  if (options.episodes < 1) throw ConfigError("episodes must be >= 1");
  std::vector<Snapshot> alices, bobs;
  std::optional<RunConfig> config;
  const auto check_setup = [&](const Checkpoint& c, const fs::path& path) {
    if (!config) {
      config = c.config;
      return;
    }
    if (!(c.config.grid == config->grid) || !(c.config.game == config->game) ||
        !(c.config.reward == config->reward)) {
      throw ValidationError(path.string() + " was trained on a different game setup");
    }
  };
  for (const fs::path& p : options.alice) {
    const Checkpoint c = ReadCheckpoint(p);
    check_setup(c, p);
    alices.push_back(Snapshot{c.alice(), c.round()});
  }
  for (const fs::path& p : options.bob) {
    const Checkpoint c = ReadCheckpoint(p);
    check_setup(c, p);
    bobs.push_back(Snapshot{c.solver(), c.round()});
  }
  ApplyWorkers(config->workers);
  const GameSetup setup{config->grid, config->reward, config->game, config->abc};
  const std::uint64_t seed = options.seed.value_or(config->eval.seed);
  const PayoffMatrix m = ComputePayoff(setup, alices, bobs, options.episodes, seed);

  Json j;
  j["episodes"] = options.episodes;
  j["seed"] = seed;
  j["alice_steps"] = m.alice_steps;
  j["bob_steps"] = m.bob_steps;
  j["rate"] = Json::array();
  std::vector<std::string> rows, cols;
  for (std::uint64_t s : m.alice_steps) rows.push_back(Label(s));
  for (std::uint64_t s : m.bob_steps) cols.push_back(Label(s));
  for (const auto& row : m.rate) {
    Json r = Json::array();
    for (const auto& v : row) r.push_back(v ? Json(*v) : Json(nullptr));
    j["rate"].push_back(r);
  }
  fs::path base = options.output;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env && base.is_relative()) {
    base = fs::path(env) / base;
  }
  WriteText(base.string() + ".json", j.dump(2) + "\n");
  WriteText(base.string() + ".svg",
            HeatmapSvg("Bob success rate against Alice goals", rows, cols, m.rate,
                       "Alice step", "Bob step"));
  out << "alice\\bob";
  for (const auto& c : cols) out << "\t" << c;
  out << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << rows[i];
    for (const auto& v : m.rate[i]) {
      out << "\t";
      if (v) {
        out << *v;
      } else {
        out << "n/a";
      }
    }
    out << "\n";
  }
  return m;
}

ReportResult RunReport(const ReportOptions& options, std::ostream& out,
                       std::ostream& err) {
  std::vector<fs::path> runs{options.run};
  runs.insert(runs.end(), options.compare.begin(), options.compare.end());
  const fs::path dir = options.output.value_or(options.run / "report");
  fs::create_directories(dir);

  struct Point {
    std::uint64_t step;
    double rate;
    int successes = -1;
    int goals = -1;
  };
  // task -> run index -> step -> point
  std::map<std::string, std::map<std::size_t, std::map<std::uint64_t, Point>>> data;
  std::vector<std::string> run_labels;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::string label = runs[k].filename().string();
    if (label.empty()) label = runs[k].parent_path().filename().string();
    if (std::find(run_labels.begin(), run_labels.end(), label) != run_labels.end()) {
      label = runs[k].string();
    }
    run_labels.push_back(label);
    const auto records = ReadMetrics(RunLayout::At(runs[k]).metrics);
    if (records.empty()) {
      err << "warning: no metrics records in " << runs[k].string() << "\n";
    }
    for (const MetricsRecord& r : records) {
      if (r.agent != kEvalAgent || r.name.rfind("holdout/", 0) != 0) continue;
      const std::string rest = r.name.substr(8);
      const auto slash = rest.rfind('/');
      if (slash == std::string::npos) continue;
      const std::string task = rest.substr(0, slash);
      const std::string field = rest.substr(slash + 1);
      Point& p = data[task][k].try_emplace(r.step, Point{r.step, 0.0}).first->second;
      if (field == "success_rate") {
        p.rate = r.value;
      } else if (field == "successes") {
        p.successes = static_cast<int>(r.value);
      } else if (field == "goals") {
        p.goals = static_cast<int>(r.value);
      }
    }
  }

  ReportResult result;
  for (const auto& [task, by_run] : data) {
    std::vector<Series> series;
    for (const auto& [k, points] : by_run) {
      Series s{run_labels[k], {}};
      for (const auto& [step, p] : points) {
        s.points.emplace_back(static_cast<double>(step), p.rate);
      }
      series.push_back(std::move(s));
      const Point& last = points.rbegin()->second;
      ReportRow row{run_labels[k], task, last.step, std::max(last.successes, 0),
                    std::max(last.goals, 0), last.rate, {}};
      row.ci = WilsonInterval(row.successes, row.goals);
      result.rows.push_back(row);
    }
    LineChartOptions chart;
    chart.title = task + " holdout success";
    const fs::path path = dir / (task + ".svg");
    WriteText(path, LineChartSvg(series, chart));
    result.charts.push_back(path);
  }

  std::ostringstream md;
  md << "| run | task | step | success | goals | rate | 99% CI |\n"
     << "|---|---|---|---|---|---|---|\n";
  char buf[256];
  for (const ReportRow& r : result.rows) {
    std::snprintf(buf, sizeof buf, "| %s | %s | %llu | %d | %d | %.3f | [%.3f, %.3f] |\n",
                  r.run.c_str(), r.task.c_str(),
                  static_cast<unsigned long long>(r.step), r.successes, r.goals,
                  r.rate, r.ci.low, r.ci.high);
    md << buf;
  }
  if (result.rows.empty()) {
    err << "warning: no holdout evaluations found; the report is empty\n";
    md << "\nNo holdout evaluations recorded.\n";
  }
  result.summary = dir / "summary.md";
  WriteText(result.summary, md.str());
  out << md.str();
  return result;
}

}  // namespace asp
