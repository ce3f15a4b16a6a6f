#include "asp/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "asp/errors.hpp"
#include "asp/kernels.hpp"
#include "asp/random.hpp"

namespace asp {

void PpoHyperParams::Validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw ConfigError("ppo.gae_lambda must be in [0, 1]");
  }
  if (!(clip_eps > 0.0)) throw ConfigError("ppo.clip_eps must be > 0");
  if (!(entropy_coef >= 0.0)) throw ConfigError("ppo.entropy_coef must be >= 0");
  if (!(value_loss_weight >= 0.0)) {
    throw ConfigError("ppo.value_loss_weight must be >= 0");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate must be > 0");
  if (sample_reuse < 1) throw ConfigError("ppo.sample_reuse must be >= 1");
  if (minibatch_size < 1) throw ConfigError("ppo.minibatch_size must be >= 1");
  if (!(max_grad_norm >= 0.0)) throw ConfigError("ppo.max_grad_norm must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_epsilon > 0.0)) {
    throw ConfigError("invalid Adam constants");
  }
}

GaeResult ComputeGae(std::span<const double> rewards,
                     std::span<const double> values,
                     std::span<const std::uint8_t> dones, double gamma,
                     double lambda, double bootstrap) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw ValidationError("GAE inputs differ in length");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const bool done = dones[k] != 0;
    const double next_value = done ? 0.0 : (k + 1 < n ? values[k + 1] : bootstrap);
    const double delta = rewards[k] + gamma * next_value - values[k];
    running = delta + (done ? 0.0 : gamma * lambda * running);
    out.advantages[k] = running;
    out.returns[k] = running + values[k];
  }
  return out;
}

SurrogateTerm PpoSampleTerm(double new_log_prob, double old_log_prob,
                            double advantage, double clip_eps) {
  const double r = std::exp(new_log_prob - old_log_prob);
  const double clipped_r = std::clamp(r, 1.0 - clip_eps, 1.0 + clip_eps);
  const double unclipped = r * advantage;
  const double clipped = clipped_r * advantage;
  SurrogateTerm term;
  term.clipped = clipped_r != r;
  if (unclipped <= clipped) {
    term.loss = -unclipped;
    term.dloss_dlogprob = -unclipped;
  } else {
    term.loss = -clipped;
    term.dloss_dlogprob = 0.0;
  }
  return term;
}

double PpoPolicyLoss(std::span<const double> new_log_probs,
                     std::span<const double> old_log_probs,
                     std::span<const double> advantages, double clip_eps) {
  const std::size_t n = new_log_probs.size();
  if (old_log_probs.size() != n || advantages.size() != n) {
    throw ValidationError("policy loss inputs differ in length");
  }
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += PpoSampleTerm(new_log_probs[i], old_log_probs[i], advantages[i],
                           clip_eps)
                 .loss;
  }
  return total / static_cast<double>(n);
}

double ValueLoss(std::span<const double> new_values,
                 std::span<const double> returns) {
  if (new_values.size() != returns.size()) {
    throw ValidationError("value loss inputs differ in length");
  }
  if (new_values.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < new_values.size(); ++i) {
    const double d = new_values[i] - returns[i];
    total += d * d;
  }
  return total / static_cast<double>(new_values.size());
}

void TransitionBatch::Validate() const {
  const std::size_t n = actions.size();
  if (observations.size() != n || rewards.size() != n ||
      old_log_probs.size() != n || old_values.size() != n ||
      dones.size() != n || advantages.size() != n || returns.size() != n) {
    throw ValidationError("transition batch columns differ in length");
  }
}

namespace {

template <typename T>
void Extend(std::vector<T>& dst, const std::vector<T>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

void TransitionBatch::Append(const TransitionBatch& other) {
  Extend(observations, other.observations);
  Extend(actions, other.actions);
  Extend(rewards, other.rewards);
  Extend(old_log_probs, other.old_log_probs);
  Extend(old_values, other.old_values);
  Extend(dones, other.dones);
  Extend(advantages, other.advantages);
  Extend(returns, other.returns);
}

void AppendTrajectories(std::span<const Trajectory* const> trajectories,
                        const PpoHyperParams& hp, TransitionBatch& batch) {
  std::vector<double> rewards, values;
  std::vector<std::uint8_t> dones;
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const Trajectory& traj = *trajectories[k];
    if (traj.rewards.size() != traj.size() ||
        traj.log_probs.size() != traj.size() ||
        traj.values.size() != traj.size() ||
        traj.observations.size() != traj.size()) {
      throw ValidationError("trajectory columns differ in length");
    }
    if (traj.empty()) continue;
    const bool last = k + 1 == trajectories.size();
    rewards.insert(rewards.end(), traj.rewards.begin(), traj.rewards.end());
    values.insert(values.end(), traj.values.begin(), traj.values.end());
    dones.insert(dones.end(), traj.size() - 1, 0);
    dones.push_back(traj.terminal || last ? 1 : 0);
    Extend(batch.observations, traj.observations);
    Extend(batch.actions, traj.actions);
    Extend(batch.rewards, traj.rewards);
    Extend(batch.old_log_probs, traj.log_probs);
    Extend(batch.old_values, traj.values);
  }
  const GaeResult gae =
      ComputeGae(rewards, values, dones, hp.gamma, hp.gae_lambda);
  Extend(batch.dones, dones);
  Extend(batch.advantages, gae.advantages);
  Extend(batch.returns, gae.returns);
}

void AdamUpdate(std::span<double> params, std::span<const double> grad,
                AdamState& state, const PpoHyperParams& hp) {
  if (grad.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ValidationError("Adam vectors differ in length from the parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hp.adam_beta1, t);
  const double c2 = 1.0 - std::pow(hp.adam_beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hp.adam_beta1 * state.m[i] + (1.0 - hp.adam_beta1) * grad[i];
    state.v[i] =
        hp.adam_beta2 * state.v[i] + (1.0 - hp.adam_beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.adam_epsilon);
  }
}

namespace {

std::vector<double> NormalizedAdvantages(const TransitionBatch& batch,
                                         bool normalize) {
  std::vector<double> adv = batch.advantages;
  if (!normalize || adv.size() < 2) return adv;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / n);
  for (double& a : adv) a = (a - mean) / (stddev + 1e-8);
  return adv;
}

}  // namespace

std::vector<std::vector<std::size_t>> PassSchedule(std::size_t n,
                                                   std::size_t parts,
                                                   int passes,
                                                   std::uint64_t seed) {
  Rng rng = MakeRng(seed);
  std::vector<std::vector<std::size_t>> schedule;
  std::vector<std::size_t> idx(n);
  for (int pass = 0; pass < passes; ++pass) {
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = UniformInt(rng, static_cast<int>(i));
      std::swap(idx[i - 1], idx[j]);
    }
    for (std::size_t m = 0; m < parts; ++m) {
      schedule.emplace_back(idx.begin() + m * n / parts,
                            idx.begin() + (m + 1) * n / parts);
    }
  }
  return schedule;
}

MinibatchGradient ComputeMinibatchGradient(
    const ParamVector& params, const TransitionBatch& batch,
    std::span<const double> advantages, std::span<const std::size_t> rl_rows,
    const DemoBatch* bc, std::span<const std::size_t> bc_rows,
    const PpoHyperParams& hp, const AbcParams& abc, bool parallel) {
  const std::size_t rl_count = rl_rows.size();
  const std::size_t bc_count = bc != nullptr ? bc_rows.size() : 0;
  if (rl_count == 0) throw ValidationError("minibatch needs RL samples");

  // Rows [0, rl_count) are RL samples, the rest demonstrations.
  std::vector<const Observation*> rows;
  std::vector<std::size_t> source;
  rows.reserve(rl_count + bc_count);
  for (std::size_t i : rl_rows) {
    rows.push_back(&batch.observations[i]);
    source.push_back(i);
  }
  for (std::size_t k = 0; k < bc_count; ++k) {
    rows.push_back(&bc->observations[bc_rows[k]]);
    source.push_back(bc_rows[k]);
  }

  MinibatchGradient result;
  std::vector<MinibatchRowStats>& row_stats = result.rows;
  row_stats.resize(rows.size());
  const double inv_rl = 1.0 / static_cast<double>(rl_count);
  const double inv_bc = bc_count > 0 ? 1.0 / static_cast<double>(bc_count) : 0.0;

  const SampleLossFn loss = [&](std::size_t row, const PolicyOutput& out,
                                OutputGradient& grad) -> double {
    const std::size_t i = source[row];
    MinibatchRowStats& rs = row_stats[row];
    if (row < rl_count) {
      const LogProbEntropy lpe = LogProbAndEntropy(out, batch.actions[i]);
      const SurrogateTerm s = PpoSampleTerm(
          lpe.log_prob, batch.old_log_probs[i], advantages[i], hp.clip_eps);
      const double dv = out.value - batch.returns[i];
      rs.policy = s.loss;
      rs.value = dv * dv;
      rs.entropy = lpe.entropy;
      rs.kl = batch.old_log_probs[i] - lpe.log_prob;
      rs.clipped = s.clipped;
      AddLogProbGradient(out, batch.actions[i], s.dloss_dlogprob * inv_rl,
                         grad.logits);
      AddEntropyGradient(out, -hp.entropy_coef * inv_rl, grad.logits);
      grad.value = 2.0 * hp.value_loss_weight * dv * inv_rl;
      return (s.loss + hp.value_loss_weight * dv * dv -
              hp.entropy_coef * lpe.entropy) *
             inv_rl;
    }
    const double lp = LogProbAndEntropy(out, bc->actions[i]).log_prob;
    const AbcTerm t = AbcSampleTerm(lp, bc->old_log_probs[i], abc);
    rs.abc = t.loss;
    AddLogProbGradient(out, bc->actions[i],
                       abc.beta * t.dloss_dlogprob * inv_bc, grad.logits);
    return abc.beta * t.loss * inv_bc;
  };

  result.gradient = parallel ? ComputeBatchGradient(params, rows, loss)
                             : ComputeBatchGradientSerial(params, rows, loss);
  return result;
}

OptimizeResult Optimize(const ParamVector& params, const AdamState& adam,
                        const TransitionBatch& batch, const DemoBatch* bc,
                        const PpoHyperParams& hp, const AbcParams& abc,
                        std::uint64_t seed, bool parallel) {
  hp.Validate();
  batch.Validate();
  if (batch.empty()) throw ValidationError("optimize needs a nonempty batch");
  const bool use_bc = bc != nullptr && !bc->empty() && abc.enabled;
  if (use_bc) abc.Validate();

  OptimizeResult result{params, adam, {}};
  if (result.adam.m.empty()) result.adam = AdamState::Zeros(params.values.size());
  const std::vector<double> adv =
      NormalizedAdvantages(batch, hp.normalize_advantages);

  const std::size_t n = batch.size();
  const std::size_t mb = std::min<std::size_t>(hp.minibatch_size, n);
  const std::size_t parts = (n + mb - 1) / mb;
  const std::size_t n_bc = use_bc ? bc->size() : 0;
  const auto schedule =
      PassSchedule(n, parts, hp.sample_reuse, DeriveSeed(seed, 0));
  const auto bc_schedule =
      PassSchedule(n_bc, parts, hp.sample_reuse, DeriveSeed(seed, 1));

  UpdateStats& stats = result.stats;
  double clip_count = 0.0, kl_sum = 0.0, grad_norm_sum = 0.0;
  std::size_t rl_seen = 0, bc_seen = 0;

  for (std::size_t step = 0; step < schedule.size(); ++step) {
    const std::vector<std::size_t>& rl_rows = schedule[step];
    const std::vector<std::size_t>& bc_rows = bc_schedule[step];
    const std::size_t rl_count = rl_rows.size();

    MinibatchGradient mg = ComputeMinibatchGradient(
        result.params, batch, adv, rl_rows, use_bc ? bc : nullptr, bc_rows, hp,
        abc, parallel);
    BatchGradient& g = mg.gradient;
    const std::vector<MinibatchRowStats>& row_stats = mg.rows;

    double norm = 0.0;
    for (double v : g.gradient) norm += v * v;
    norm = std::sqrt(norm);
    grad_norm_sum += norm;
    if (hp.max_grad_norm > 0.0 && norm > hp.max_grad_norm) {
      const double scale = hp.max_grad_norm / norm;
      for (double& v : g.gradient) v *= scale;
    }
    AdamUpdate(result.params.values, g.gradient, result.adam, hp);
    for (double v : result.params.values) {
      if (!std::isfinite(v)) throw NumericError("non-finite parameter after update");
    }

    for (std::size_t row = 0; row < row_stats.size(); ++row) {
      const MinibatchRowStats& rs = row_stats[row];
      if (row < rl_count) {
        stats.policy_loss += rs.policy;
        stats.value_loss += rs.value;
        stats.entropy += rs.entropy;
        kl_sum += rs.kl;
        clip_count += rs.clipped ? 1.0 : 0.0;
      } else {
        stats.abc_loss += rs.abc;
      }
    }
    rl_seen += rl_count;
    bc_seen += row_stats.size() - rl_count;
    ++stats.minibatch_updates;
  }

  const double rl_total = static_cast<double>(rl_seen);
  stats.policy_loss /= rl_total;
  stats.value_loss /= rl_total;
  stats.entropy /= rl_total;
  stats.clip_fraction = clip_count / rl_total;
  stats.approx_kl = kl_sum / rl_total;
  if (bc_seen > 0) stats.abc_loss /= static_cast<double>(bc_seen);
  stats.grad_norm = grad_norm_sum / stats.minibatch_updates;
  stats.samples = n;
  stats.bc_samples = n_bc;
  return result;
}

}  // namespace asp
