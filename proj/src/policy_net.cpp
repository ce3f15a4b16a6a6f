#include "asp/policy_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "asp/errors.hpp"

namespace asp {

namespace {

struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;  // weights [out][in] then bias [out]

  std::size_t size() const { return in * out + out; }
};

struct TowerLayout {
  std::vector<Dense> embed;
  std::vector<Dense> trunk;
  Dense head;
  std::size_t begin = 0;
  std::size_t end = 0;
};

TowerLayout BuildTower(const ArchitectureSpec& spec, std::size_t head_width,
                       std::size_t offset) {
  TowerLayout t;
  t.begin = offset;
  std::size_t in = kObjectFeatures;
  for (int w : spec.object_embed_widths) {
    t.embed.push_back({in, static_cast<std::size_t>(w), offset});
    offset += t.embed.back().size();
    in = w;
  }
  in += kGripperFeatures;
  for (int w : spec.trunk_widths) {
    t.trunk.push_back({in, static_cast<std::size_t>(w), offset});
    offset += t.trunk.back().size();
    in = w;
  }
  t.head = {in, head_width, offset};
  offset += t.head.size();
  t.end = offset;
  return t;
}

struct NetLayout {
  TowerLayout policy;
  TowerLayout value;
  bool shared = false;
};

NetLayout BuildLayout(const ArchitectureSpec& spec) {
  NetLayout layout;
  layout.shared = !spec.separate_value_net;
  layout.policy = BuildTower(spec, layout.shared ? kNumLogits + 1 : kNumLogits, 0);
  if (!layout.shared) layout.value = BuildTower(spec, 1, layout.policy.end);
  return layout;
}

// y = W x + b
inline void DenseForward(const double* p, const Dense& d, const double* x,
                         double* y) {
  const double* w = p + d.offset;
  const double* b = w + d.in * d.out;
  for (std::size_t i = 0; i < d.out; ++i) {
    const double* row = w + i * d.in;
    double acc = 0.0;
    for (std::size_t j = 0; j < d.in; ++j) acc += row[j] * x[j];
    y[i] = acc + b[i];
  }
}

// Accumulates dW += dy x^T, db += dy and, when dx is given, dx = W^T dy.
inline void DenseBackward(const double* p, const Dense& d, const double* x,
                          const double* dy, double* g, double* dx) {
  const double* w = p + d.offset;
  double* gw = g + d.offset;
  double* gb = gw + d.in * d.out;
  if (dx != nullptr) std::fill(dx, dx + d.in, 0.0);
  for (std::size_t i = 0; i < d.out; ++i) {
    const double dyi = dy[i];
    gb[i] += dyi;
    if (dyi == 0.0) continue;
    double* grow = gw + i * d.in;
    for (std::size_t j = 0; j < d.in; ++j) grow[j] += dyi * x[j];
    if (dx != nullptr) {
      const double* row = w + i * d.in;
      for (std::size_t j = 0; j < d.in; ++j) dx[j] += dyi * row[j];
    }
  }
}

inline void TanhInPlace(double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
}

void TowerForward(const double* p, const TowerLayout& t,
                  const Observation& obs, TowerCache& c, double* out) {
  const std::size_t n = obs.NumObjects();
  c.embed.resize(t.embed.size());
  const double* in = obs.objects.data();
  std::size_t in_width = kObjectFeatures;
  for (std::size_t l = 0; l < t.embed.size(); ++l) {
    const Dense& d = t.embed[l];
    std::vector<double>& act = c.embed[l];
    act.resize(n * d.out);
    for (std::size_t o = 0; o < n; ++o) {
      DenseForward(p, d, in + o * in_width, act.data() + o * d.out);
    }
    TanhInPlace(act.data(), act.size());
    in = act.data();
    in_width = d.out;
  }
  const std::size_t width = in_width;
  c.argmax.assign(width, 0);
  c.pooled_input.resize(width + kGripperFeatures);
  for (std::size_t j = 0; j < width; ++j) {
    double best = in[j];
    int arg = 0;
    for (std::size_t o = 1; o < n; ++o) {
      if (in[o * width + j] > best) {
        best = in[o * width + j];
        arg = static_cast<int>(o);
      }
    }
    c.pooled_input[j] = best;
    c.argmax[j] = arg;
  }
  std::copy(obs.gripper.begin(), obs.gripper.end(),
            c.pooled_input.begin() + width);

  c.trunk.resize(t.trunk.size());
  const double* x = c.pooled_input.data();
  for (std::size_t l = 0; l < t.trunk.size(); ++l) {
    const Dense& d = t.trunk[l];
    c.trunk[l].resize(d.out);
    DenseForward(p, d, x, c.trunk[l].data());
    TanhInPlace(c.trunk[l].data(), d.out);
    x = c.trunk[l].data();
  }
  DenseForward(p, t.head, x, out);
}

void TowerBackward(const double* p, const TowerLayout& t,
                   const Observation& obs, const TowerCache& c,
                   const double* dout, double* g) {
  const std::size_t n = obs.NumObjects();
  std::vector<double> dx, da;
  const double* head_in =
      t.trunk.empty() ? c.pooled_input.data() : c.trunk.back().data();
  dx.resize(t.head.in);
  DenseBackward(p, t.head, head_in, dout, g, dx.data());
  for (std::size_t l = t.trunk.size(); l-- > 0;) {
    const Dense& d = t.trunk[l];
    const std::vector<double>& a = c.trunk[l];
    da.resize(d.out);
    for (std::size_t i = 0; i < d.out; ++i) da[i] = dx[i] * (1.0 - a[i] * a[i]);
    const double* x = l == 0 ? c.pooled_input.data() : c.trunk[l - 1].data();
    dx.resize(d.in);
    DenseBackward(p, d, x, da.data(), g, dx.data());
  }
  // dx now holds dLoss/d(pooled ++ gripper); route pooled part to winners.
  const std::size_t width = t.embed.back().out;
  std::vector<double> d_act(n * width, 0.0);
  for (std::size_t j = 0; j < width; ++j) {
    d_act[c.argmax[j] * width + j] = dx[j];
  }
  std::vector<double> d_in;
  for (std::size_t l = t.embed.size(); l-- > 0;) {
    const Dense& d = t.embed[l];
    const std::vector<double>& a = c.embed[l];
    const double* x = l == 0 ? obs.objects.data() : c.embed[l - 1].data();
    if (l > 0) d_in.assign(n * d.in, 0.0);
    da.resize(d.out);
    for (std::size_t o = 0; o < n; ++o) {
      const double* dao = d_act.data() + o * d.out;
      const double* ao = a.data() + o * d.out;
      bool any = false;
      for (std::size_t i = 0; i < d.out; ++i) {
        da[i] = dao[i] * (1.0 - ao[i] * ao[i]);
        any = any || da[i] != 0.0;
      }
      if (!any) continue;
      DenseBackward(p, d, x + o * d.in, da.data(), g,
                    l > 0 ? d_in.data() + o * d.in : nullptr);
    }
    if (l > 0) d_act.swap(d_in);
  }
}

void CheckObservation(const Observation& obs) {
  if (obs.objects.empty() ||
      obs.objects.size() % static_cast<std::size_t>(kObjectFeatures) != 0) {
    throw ValidationError("observation object rows must be a positive "
                          "multiple of " +
                          std::to_string(kObjectFeatures) + " features");
  }
}

}  // namespace

void ArchitectureSpec::Validate() const {
  if (object_embed_widths.empty()) {
    throw ConfigError("object_embed_widths needs at least one layer");
  }
  for (int w : object_embed_widths) {
    if (w < 1) throw ConfigError("layer widths must be >= 1");
  }
  for (int w : trunk_widths) {
    if (w < 1) throw ConfigError("layer widths must be >= 1");
  }
  if (action_factor_sizes != kActionFactorSizes) {
    throw ConfigError("action factor sizes must be [5, 4, 3]");
  }
}

std::size_t ArchitectureSpec::ParamCount() const {
  const NetLayout l = BuildLayout(*this);
  return l.shared ? l.policy.end : l.value.end;
}

ParamLayout LayoutOf(const ArchitectureSpec& spec) {
  const NetLayout l = BuildLayout(spec);
  ParamLayout out;
  out.policy_begin = l.policy.begin;
  out.policy_end = l.policy.end;
  if (!l.shared) {
    out.value_begin = l.value.begin;
    out.value_end = l.value.end;
  }
  return out;
}

ParamVector InitParams(const ArchitectureSpec& spec, std::uint64_t seed,
                       const InitOptions& options) {
  spec.Validate();
  const NetLayout layout = BuildLayout(spec);
  ParamVector params;
  params.spec = spec;
  params.values.assign(spec.ParamCount(), 0.0);
  Rng rng = MakeRng(seed);
  auto fill = [&](const Dense& d, double scale) {
    const double bound = scale / std::sqrt(static_cast<double>(d.in));
    for (std::size_t k = 0; k < d.in * d.out; ++k) {
      params.values[d.offset + k] = (2.0 * UniformUnit(rng) - 1.0) * bound;
    }
  };
  auto fill_tower = [&](const TowerLayout& t, double head_scale) {
    for (const Dense& d : t.embed) fill(d, 1.0);
    for (const Dense& d : t.trunk) fill(d, 1.0);
    fill(t.head, head_scale);
  };
  fill_tower(layout.policy, options.policy_head_scale);
  if (!layout.shared) fill_tower(layout.value, options.value_head_scale);
  return params;
}

PolicyOutput Forward(const ParamVector& params, const Observation& obs) {
  ForwardCache cache;
  return Forward(params, obs, cache);
}

PolicyOutput Forward(const ParamVector& params, const Observation& obs,
                     ForwardCache& cache) {
  CheckObservation(obs);
  const NetLayout layout = BuildLayout(params.spec);
  if (params.values.size() !=
      (layout.shared ? layout.policy.end : layout.value.end)) {
    throw ValidationError("parameter vector length does not match its spec");
  }
  const double* p = params.values.data();
  PolicyOutput out;
  if (layout.shared) {
    std::array<double, kNumLogits + 1> head{};
    TowerForward(p, layout.policy, obs, cache.policy, head.data());
    std::copy(head.begin(), head.begin() + kNumLogits, out.logits.begin());
    out.value = head[kNumLogits];
  } else {
    TowerForward(p, layout.policy, obs, cache.policy, out.logits.data());
    TowerForward(p, layout.value, obs, cache.value, &out.value);
  }
  for (double v : out.logits) {
    if (!std::isfinite(v)) throw NumericError("non-finite policy logit");
  }
  if (!std::isfinite(out.value)) throw NumericError("non-finite value output");
  return out;
}

void Backward(const ParamVector& params, const Observation& obs,
              const ForwardCache& cache, const OutputGradient& upstream,
              std::span<double> grad) {
  const NetLayout layout = BuildLayout(params.spec);
  if (grad.size() != params.values.size()) {
    throw ValidationError("gradient buffer length mismatch");
  }
  const double* p = params.values.data();
  if (layout.shared) {
    std::array<double, kNumLogits + 1> dout{};
    std::copy(upstream.logits.begin(), upstream.logits.end(), dout.begin());
    dout[kNumLogits] = upstream.value;
    TowerBackward(p, layout.policy, obs, cache.policy, dout.data(), grad.data());
    return;
  }
  if (std::any_of(upstream.logits.begin(), upstream.logits.end(),
                  [](double v) { return v != 0.0; })) {
    TowerBackward(p, layout.policy, obs, cache.policy, upstream.logits.data(),
                  grad.data());
  }
  if (upstream.value != 0.0) {
    TowerBackward(p, layout.value, obs, cache.value, &upstream.value,
                  grad.data());
  }
}

std::array<double, kNumLogits> LogSoftmax(const PolicyOutput& out) {
  std::array<double, kNumLogits> logp{};
  for (int f = 0; f < kNumActionFactors; ++f) {
    const int begin = kFactorOffsets[f];
    const int end = begin + kActionFactorSizes[f];
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = begin; i < end; ++i) mx = std::max(mx, out.logits[i]);
    double sum = 0.0;
    for (int i = begin; i < end; ++i) sum += std::exp(out.logits[i] - mx);
    const double lse = mx + std::log(sum);
    for (int i = begin; i < end; ++i) logp[i] = out.logits[i] - lse;
  }
  return logp;
}

SampledAction SampleAction(const PolicyOutput& out, Rng& rng) {
  const auto logp = LogSoftmax(out);
  std::array<int, kNumActionFactors> idx{};
  double log_prob = 0.0;
  for (int f = 0; f < kNumActionFactors; ++f) {
    const int begin = kFactorOffsets[f];
    const int size = kActionFactorSizes[f];
    const double u = UniformUnit(rng);
    double cdf = 0.0;
    int choice = size - 1;
    for (int i = 0; i < size; ++i) {
      cdf += std::exp(logp[begin + i]);
      if (u < cdf) {
        choice = i;
        break;
      }
    }
    // Rounding can leave the tail with zero mass; never pick such an entry.
    while (choice > 0 && std::exp(logp[begin + choice]) == 0.0) --choice;
    idx[f] = choice;
    log_prob += logp[begin + choice];
  }
  return {Action::FromFactorIndices(idx), log_prob};
}

LogProbEntropy LogProbAndEntropy(const PolicyOutput& out,
                                 const Action& action) {
  const auto idx = action.FactorIndices();
  for (int f = 0; f < kNumActionFactors; ++f) {
    if (idx[f] < 0 || idx[f] >= kActionFactorSizes[f]) {
      throw ValidationError("action index out of range for factor " +
                            std::to_string(f));
    }
  }
  const auto logp = LogSoftmax(out);
  LogProbEntropy r;
  for (int f = 0; f < kNumActionFactors; ++f) {
    const int begin = kFactorOffsets[f];
    r.log_prob += logp[begin + idx[f]];
    for (int i = 0; i < kActionFactorSizes[f]; ++i) {
      const double p = std::exp(logp[begin + i]);
      if (p > 0.0) r.entropy -= p * logp[begin + i];
    }
  }
  return r;
}

void AddLogProbGradient(const PolicyOutput& out, const Action& action,
                        double scale, std::array<double, kNumLogits>& grad) {
  const auto logp = LogSoftmax(out);
  const auto idx = action.FactorIndices();
  for (int f = 0; f < kNumActionFactors; ++f) {
    const int begin = kFactorOffsets[f];
    for (int i = 0; i < kActionFactorSizes[f]; ++i) {
      const double indicator = i == idx[f] ? 1.0 : 0.0;
      grad[begin + i] += scale * (indicator - std::exp(logp[begin + i]));
    }
  }
}

void AddEntropyGradient(const PolicyOutput& out, double scale,
                        std::array<double, kNumLogits>& grad) {
  const auto logp = LogSoftmax(out);
  for (int f = 0; f < kNumActionFactors; ++f) {
    const int begin = kFactorOffsets[f];
    const int size = kActionFactorSizes[f];
    double entropy = 0.0;
    for (int i = 0; i < size; ++i) {
      entropy -= std::exp(logp[begin + i]) * logp[begin + i];
    }
    // dH/dz_i = -p_i (log p_i + H)
    for (int i = 0; i < size; ++i) {
      const double p = std::exp(logp[begin + i]);
      grad[begin + i] += scale * (-p * (logp[begin + i] + entropy));
    }
  }
}

std::string DescribeSpec(const ArchitectureSpec& spec) {
  std::ostringstream out;
  auto list = [&](const std::vector<int>& v) {
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    out << ']';
  };
  out << "embed=";
  list(spec.object_embed_widths);
  out << " trunk=";
  list(spec.trunk_widths);
  out << " value=" << (spec.separate_value_net ? "separate" : "shared")
      << " params=" << spec.ParamCount();
  return out.str();
}

}  // namespace asp
