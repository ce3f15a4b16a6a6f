// Parallel kernels against their serial references: wall time, speedup, and a
// check that both paths produce the same result.
//
//   asp_bench [--reps N] [--threads T] [--samples S] [--episodes E]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "asp/holdout.hpp"
#include "asp/kernels.hpp"
#include "asp/observation.hpp"
#include "asp/policy_net.hpp"
#include "asp/random.hpp"
#include "asp/selfplay.hpp"

namespace {

using Clock = std::chrono::steady_clock;

// Best-of-`reps` wall time in milliseconds.
double TimeBest(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  return best;
}

void Row(const char* name, double serial_ms, double parallel_ms, bool agree) {
  std::printf("%-22s %12.2f %12.2f %8.2fx  %s\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, agree ? "match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP kernel benchmark"};
  int reps = 3, threads = 0, samples = 2048, episodes = 256;
  app.add_option("--reps", reps, "Repetitions, best time kept")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)");
  app.add_option("--samples", samples, "Gradient batch size")->check(CLI::PositiveNumber);
  app.add_option("--episodes", episodes, "Episodes for collection and eval")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  using namespace asp;
  GridConfig grid;
  grid.max_objects = 2;
  const ParamVector params = InitParams(ArchitectureSpec{}, 7);
  Rng rng = MakeRng(99);
  std::vector<Observation> observations;
  std::vector<Action> actions;
  for (int k = 0; k < samples; ++k) {
    const int n = 1 + UniformInt(rng, 2);
    const WorldState s = SampleInitialState(grid, n, rng);
    observations.push_back(
        Observe(grid, s, GoalFromState(SampleInitialState(grid, n, rng))));
    actions.push_back(Action::FromIndex(UniformInt(rng, kNumActions)));
  }
  std::vector<const Observation*> rows;
  for (const Observation& o : observations) rows.push_back(&o);
  const SampleLossFn loss = [&](std::size_t i, const PolicyOutput& out, OutputGradient& g) {
    const LogProbEntropy le = LogProbAndEntropy(out, actions[i]);
    AddLogProbGradient(out, actions[i], -1.0, g.logits);
    g.value = out.value;
    return -le.log_prob + 0.5 * out.value * out.value;
  };

  std::printf("OpenMP threads: %d, reps: %d\n", omp_get_max_threads(), reps);
  std::printf("%-22s %12s %12s %9s  %s\n", "kernel", "serial ms", "parallel ms", "speedup",
              "result");

  BatchGradient serial_grad, parallel_grad;
  const double gs = TimeBest(reps, [&] { serial_grad = ComputeBatchGradientSerial(params, rows, loss); });
  const double gp = TimeBest(reps, [&] { parallel_grad = ComputeBatchGradient(params, rows, loss); });
  double max_diff = 0.0;
  for (std::size_t i = 0; i < serial_grad.gradient.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(serial_grad.gradient[i] - parallel_grad.gradient[i]));
  }
  Row("batch gradient", gs, gp, max_diff <= 1e-9 * std::max(1.0, std::abs(serial_grad.loss)));

  GameSetup setup;
  setup.game.max_objects = 1;
  const ParamVector alice = InitParams(ArchitectureSpec{}, 1);
  const ParamVector bob = InitParams(ArchitectureSpec{}, 2);
  OpponentPool alice_pool, bob_pool;
  alice_pool.Add(InitParams(ArchitectureSpec{}, 3), 0);
  bob_pool.Add(InitParams(ArchitectureSpec{}, 4), 0);
  CollectOptions collect;
  collect.episodes = episodes;
  Rollouts serial_roll, parallel_roll;
  collect.parallel = false;
  const double cs = TimeBest(reps, [&] {
    serial_roll = CollectRollouts(setup, alice, bob, alice_pool, bob_pool, 5, collect);
  });
  collect.parallel = true;
  const double cp = TimeBest(reps, [&] {
    parallel_roll = CollectRollouts(setup, alice, bob, alice_pool, bob_pool, 5, collect);
  });
  bool same_rollouts = serial_roll.episodes.size() == parallel_roll.episodes.size();
  for (std::size_t i = 0; same_rollouts && i < serial_roll.episodes.size(); ++i) {
    same_rollouts = serial_roll.episodes[i].TotalGoals() == parallel_roll.episodes[i].TotalGoals() &&
                    serial_roll.episodes[i].TotalSuccesses() ==
                        parallel_roll.episodes[i].TotalSuccesses();
  }
  same_rollouts = same_rollouts && serial_roll.stats.alice_reward == parallel_roll.stats.alice_reward;
  Row("rollout collection", cs, cp, same_rollouts);

  const HoldoutTask task = MakeTask("push-1");
  EvalOptions eval;
  eval.episodes = episodes;
  eval.seed = 11;
  EvalReport serial_eval, parallel_eval;
  eval.parallel = false;
  const double es = TimeBest(reps, [&] {
    serial_eval = Evaluate(setup.grid, setup.reward, setup.game, bob, task, eval);
  });
  eval.parallel = true;
  const double ep = TimeBest(reps, [&] {
    parallel_eval = Evaluate(setup.grid, setup.reward, setup.game, bob, task, eval);
  });
  Row("holdout evaluation", es, ep,
      serial_eval.goals_at_index == parallel_eval.goals_at_index &&
          serial_eval.successes_at_index == parallel_eval.successes_at_index);
  return 0;
}
