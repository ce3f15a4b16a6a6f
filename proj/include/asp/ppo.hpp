#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "asp/abc.hpp"
#include "asp/kernels.hpp"
#include "asp/observation.hpp"
#include "asp/policy_net.hpp"
#include "asp/trajectory.hpp"

namespace asp {

struct PpoHyperParams {
  double gamma = 0.998;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double entropy_coef = 0.01;
  double value_loss_weight = 1.0;
  double learning_rate = 3e-4;
  int sample_reuse = 3;
  int minibatch_size = 256;
  bool normalize_advantages = true;
  // Global gradient-norm clip per minibatch; 0 disables it.
  double max_grad_norm = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void Validate() const;
  bool operator==(const PpoHyperParams&) const = default;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Backward GAE recursion. dones[t] != 0 cuts the bootstrap after step t;
// `bootstrap` is the value following the last step when it is not done.
// Throws ValidationError on length mismatch.
GaeResult ComputeGae(std::span<const double> rewards,
                     std::span<const double> values,
                     std::span<const std::uint8_t> dones, double gamma,
                     double lambda, double bootstrap = 0.0);

// Mean of -min(r A, clip(r, 1-eps, 1+eps) A) with r = exp(new - old).
double PpoPolicyLoss(std::span<const double> new_log_probs,
                     std::span<const double> old_log_probs,
                     std::span<const double> advantages, double clip_eps);

// Per-sample clipped surrogate and its derivative with respect to new_log_prob.
struct SurrogateTerm {
  double loss = 0.0;
  double dloss_dlogprob = 0.0;
  bool clipped = false;
};
SurrogateTerm PpoSampleTerm(double new_log_prob, double old_log_prob,
                            double advantage, double clip_eps);

// Mean squared error.
double ValueLoss(std::span<const double> new_values,
                 std::span<const double> returns);

struct TransitionBatch {
  std::vector<Observation> observations;
  std::vector<Action> actions;
  std::vector<double> rewards;
  std::vector<double> old_log_probs;
  std::vector<double> old_values;
  std::vector<std::uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
  // Throws ValidationError when the columns differ in length.
  void Validate() const;
  void Append(const TransitionBatch& other);
};

// Appends a sequence of consecutive trajectories of one agent, computing GAE
// across them. A trajectory whose `terminal` flag is false bootstraps from the
// first value of the next trajectory in `trajectories`.
void AppendTrajectories(std::span<const Trajectory* const> trajectories,
                        const PpoHyperParams& hp, TransitionBatch& batch);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  static AdamState Zeros(std::size_t n) {
    return AdamState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                     0};
  }
  bool operator==(const AdamState&) const = default;
};

void AdamUpdate(std::span<double> params, std::span<const double> grad,
                AdamState& state, const PpoHyperParams& hp);

// Index lists for `passes` shuffled passes over [0, n), each pass split into
// `parts` contiguous near-equal slices, in application order.
std::vector<std::vector<std::size_t>> PassSchedule(std::size_t n,
                                                   std::size_t parts,
                                                   int passes,
                                                   std::uint64_t seed);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double abc_loss = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  std::size_t samples = 0;
  std::size_t bc_samples = 0;
  int minibatch_updates = 0;
};

struct MinibatchRowStats {
  double policy = 0.0;
  double value = 0.0;  // squared error
  double entropy = 0.0;
  double abc = 0.0;
  double kl = 0.0;
  bool clipped = false;
};

struct MinibatchGradient {
  BatchGradient gradient;
  std::vector<MinibatchRowStats> rows;  // RL rows first, then demonstrations
};

// Loss and gradient of one minibatch: the mean over `rl_rows` of the clipped
// surrogate plus value_loss_weight * squared value error minus entropy_coef *
// entropy, plus abc.beta times the mean ABC loss over `bc_rows` of `bc`.
MinibatchGradient ComputeMinibatchGradient(
    const ParamVector& params, const TransitionBatch& batch,
    std::span<const double> advantages, std::span<const std::size_t> rl_rows,
    const DemoBatch* bc, std::span<const std::size_t> bc_rows,
    const PpoHyperParams& hp, const AbcParams& abc, bool parallel = true);

struct OptimizeResult {
  ParamVector params;
  AdamState adam;
  UpdateStats stats;
};

// Runs sample_reuse passes over shuffled minibatches of `batch`, pairing each
// with an equal share of `bc` when given. Leaves the inputs untouched; throws
// NumericError (and applies nothing) on a non-finite loss or gradient.
// `parallel` selects the OpenMP gradient kernel over the serial reference.
OptimizeResult Optimize(const ParamVector& params, const AdamState& adam,
                        const TransitionBatch& batch, const DemoBatch* bc,
                        const PpoHyperParams& hp, const AbcParams& abc,
                        std::uint64_t seed, bool parallel = true);

}  // namespace asp
