#include <algorithm>
#include <cmath>
#include <numeric>

#include "asp/errors.hpp"
#include "asp/policy_net.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace asp;

namespace {

ArchitectureSpec Small(bool separate = true) {
  ArchitectureSpec spec;
  spec.object_embed_widths = {8, 8};
  spec.trunk_widths = {8};
  spec.separate_value_net = separate;
  return spec;
}

Observation RandomObservation(Rng& rng, int n_objects) {
  Observation obs;
  for (double& g : obs.gripper) g = 2.0 * UniformUnit(rng) - 1.0;
  obs.objects.resize(static_cast<std::size_t>(n_objects) * kObjectFeatures);
  for (double& v : obs.objects) v = 2.0 * UniformUnit(rng) - 1.0;
  return obs;
}

// Dense parameter count written out layer by layer.
std::size_t HandCount(int in, std::initializer_list<int> widths) {
  std::size_t total = 0;
  for (int w : widths) {
    total += static_cast<std::size_t>(in) * w + w;
    in = w;
  }
  return total;
}

}  // namespace

TEST_CASE("parameter count matches a hand count of the layers") {
  const ArchitectureSpec spec;
  // Embedding 19->64->64, trunk (64+4)->128->64, head 64->12 or 64->1.
  const std::size_t embed = HandCount(19, {64, 64});
  const std::size_t policy = embed + HandCount(68, {128, 64}) + HandCount(64, {12});
  const std::size_t value = embed + HandCount(68, {128, 64}) + HandCount(64, {1});
  CHECK(spec.ParamCount() == policy + value);
  ArchitectureSpec shared = spec;
  shared.separate_value_net = false;
  CHECK(shared.ParamCount() ==
        embed + HandCount(68, {128, 64}) + HandCount(64, {13}));
  CHECK(InitParams(spec, 1).values.size() == spec.ParamCount());
}

TEST_CASE("init is deterministic and biases start at zero") {
  const ArchitectureSpec spec = Small();
  CHECK(InitParams(spec, 4) == InitParams(spec, 4));
  CHECK_FALSE(InitParams(spec, 4).values == InitParams(spec, 5).values);
}

TEST_CASE("zero policy head gives uniform factors") {
  const ArchitectureSpec spec = Small();
  const ParamVector p = InitParams(spec, 2, InitOptions{0.0, 1.0});
  Observation obs;
  obs.objects.assign(kObjectFeatures, 0.0);
  const PolicyOutput out = Forward(p, obs);
  const auto lp = LogSoftmax(out);
  for (int i = 0; i < 5; ++i) CHECK(lp[i] == doctest::Approx(std::log(0.2)));
  for (int i = 5; i < 9; ++i) CHECK(lp[i] == doctest::Approx(std::log(0.25)));
  for (int i = 9; i < 12; ++i) CHECK(lp[i] == doctest::Approx(-std::log(3.0)));
  const LogProbEntropy le = LogProbAndEntropy(out, Action{});
  CHECK(le.log_prob == doctest::Approx(-std::log(60.0)));
  CHECK(le.entropy == doctest::Approx(std::log(60.0)));
}

TEST_CASE("output is invariant to object order") {
  Rng rng = MakeRng(17);
  for (bool separate : {true, false}) {
    const ParamVector p = InitParams(Small(separate), 9, InitOptions{1.0, 1.0});
    for (int n = 1; n <= 4; ++n) {
      const Observation obs = RandomObservation(rng, n);
      const PolicyOutput ref = Forward(p, obs);
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        const PolicyOutput out = Forward(p, PermuteObjects(obs, perm));
        CHECK(out.logits == ref.logits);
        CHECK(out.value == ref.value);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }
}

TEST_CASE("duplicated object rows pool to the single-row embedding") {
  Rng rng = MakeRng(21);
  const ParamVector p = InitParams(Small(), 3, InitOptions{1.0, 1.0});
  const Observation one = RandomObservation(rng, 1);
  Observation two = one;
  two.objects.insert(two.objects.end(), one.objects.begin(), one.objects.end());
  const PolicyOutput a = Forward(p, one);
  const PolicyOutput b = Forward(p, two);
  CHECK(a.logits == b.logits);
  CHECK(a.value == b.value);
}

TEST_CASE("forward rejects mismatched observations and parameters") {
  const ParamVector p = InitParams(Small(), 3);
  Observation bad;
  bad.objects.assign(kObjectFeatures + 1, 0.0);
  CHECK_THROWS_AS(Forward(p, bad), ValidationError);
  Observation empty;
  CHECK_THROWS_AS(Forward(p, empty), ValidationError);
  ParamVector truncated = p;
  truncated.values.pop_back();
  Observation ok;
  ok.objects.assign(kObjectFeatures, 0.0);
  CHECK_THROWS_AS(Forward(truncated, ok), ValidationError);
}

TEST_CASE("log-probs sum to one over all 60 actions") {
  Rng rng = MakeRng(2);
  const ParamVector p = InitParams(Small(), 8, InitOptions{3.0, 1.0});
  for (int k = 0; k < 10; ++k) {
    const PolicyOutput out = Forward(p, RandomObservation(rng, 2));
    double total = 0.0;
    for (int i = 0; i < kNumActions; ++i) {
      total += std::exp(LogProbAndEntropy(out, Action::FromIndex(i)).log_prob);
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("sampling frequencies follow the softmax") {
  PolicyOutput out;
  out.logits = {0.3, -1.0, 0.8, 0.0, 0.1, 1.0, -0.5, 0.0, 0.2, 0.0, 0.5, -0.3};
  const auto lp = LogSoftmax(out);
  std::array<int, kNumLogits> counts{};
  Rng rng = MakeRng(5);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const SampledAction s = SampleAction(out, rng);
    CHECK(s.log_prob == doctest::Approx(LogProbAndEntropy(out, s.action).log_prob));
    const auto idx = s.action.FactorIndices();
    for (int f = 0; f < kNumActionFactors; ++f) ++counts[kFactorOffsets[f] + idx[f]];
  }
  for (int k = 0; k < kNumLogits; ++k) {
    CHECK(std::abs(counts[k] / double(n) - std::exp(lp[k])) < 0.01);
  }
}

TEST_CASE("dominant logit makes a factor deterministic with zero entropy") {
  PolicyOutput out;
  out.logits[kFactorOffsets[1]] = 1000.0;
  Rng rng = MakeRng(1);
  for (int i = 0; i < 100; ++i) {
    CHECK(SampleAction(out, rng).action.grip == VerticalGrip::kRaise);
  }
  const LogProbEntropy le = LogProbAndEntropy(out, Action{Move::kStay, VerticalGrip::kRaise, Rotate::kNone});
  CHECK(le.entropy == doctest::Approx(std::log(5.0) + std::log(3.0)));
}

TEST_CASE("out-of-range action index is rejected") {
  PolicyOutput out;
  Action bad;
  bad.move = static_cast<Move>(7);
  CHECK_THROWS_AS(LogProbAndEntropy(out, bad), ValidationError);
}

TEST_CASE("zero upstream gives a zero gradient") {
  Rng rng = MakeRng(3);
  const ParamVector p = InitParams(Small(), 1, InitOptions{1.0, 1.0});
  const Observation obs = RandomObservation(rng, 2);
  ForwardCache cache;
  Forward(p, obs, cache);
  std::vector<double> grad(p.values.size(), 0.0);
  Backward(p, obs, cache, OutputGradient{}, grad);
  CHECK(std::all_of(grad.begin(), grad.end(), [](double g) { return g == 0.0; }));
}

TEST_CASE("backward matches central finite differences") {
  Rng rng = MakeRng(44);
  for (bool separate : {true, false}) {
    const ParamVector p = InitParams(Small(separate), 6, InitOptions{1.0, 1.0});
    const Observation obs = RandomObservation(rng, 3);
    std::array<double, kNumLogits> w{};
    for (double& x : w) x = 2.0 * UniformUnit(rng) - 1.0;
    const double wv = 0.7;
    const Action a{Move::kWest, VerticalGrip::kToggleGrip, Rotate::kCcw};
    // Loss mixes raw logits, log-prob, entropy and value.
    auto loss_of = [&](const PolicyOutput& out) {
      double l = wv * out.value * out.value;
      for (int k = 0; k < kNumLogits; ++k) l += w[k] * out.logits[k];
      const LogProbEntropy le = LogProbAndEntropy(out, a);
      return l - 0.8 * le.log_prob - 0.3 * le.entropy;
    };
    ForwardCache cache;
    const PolicyOutput out = Forward(p, obs, cache);
    OutputGradient up;
    up.logits = w;
    AddLogProbGradient(out, a, -0.8, up.logits);
    AddEntropyGradient(out, -0.3, up.logits);
    up.value = 2.0 * wv * out.value;
    std::vector<double> grad(p.values.size(), 0.0);
    Backward(p, obs, cache, up, grad);

    std::vector<std::size_t> coords;
    for (int k = 0; k < 20; ++k) coords.push_back(UniformInt(rng, static_cast<int>(p.values.size())));
    ParamVector probe = p;
    const auto numeric = oracle::FiniteDifferenceGrad(
        [&](const std::vector<double>& x) {
          probe.values = x;
          return loss_of(Forward(probe, obs));
        },
        p.values, coords, 1e-5);
    for (std::size_t k = 0; k < coords.size(); ++k) {
      CHECK(oracle::RelativeError(grad[coords[k]], numeric[k]) < 1e-4);
    }
  }
}

TEST_CASE("separate networks keep their gradients apart") {
  Rng rng = MakeRng(12);
  const ArchitectureSpec spec = Small(true);
  const ParamVector p = InitParams(spec, 6, InitOptions{1.0, 1.0});
  const ParamLayout layout = LayoutOf(spec);
  const Observation obs = RandomObservation(rng, 2);
  ForwardCache cache;
  const PolicyOutput out = Forward(p, obs, cache);

  OutputGradient value_only;
  value_only.value = 1.0;
  std::vector<double> g(p.values.size(), 0.0);
  Backward(p, obs, cache, value_only, g);
  for (std::size_t i = layout.policy_begin; i < layout.policy_end; ++i) CHECK(g[i] == 0.0);

  OutputGradient policy_only;
  AddLogProbGradient(out, Action{}, 1.0, policy_only.logits);
  std::fill(g.begin(), g.end(), 0.0);
  Backward(p, obs, cache, policy_only, g);
  for (std::size_t i = layout.value_begin; i < layout.value_end; ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("architecture validation") {
  ArchitectureSpec spec;
  spec.object_embed_widths = {};
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
  spec = ArchitectureSpec{};
  spec.trunk_widths = {0};
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
  spec = ArchitectureSpec{};
  spec.action_factor_sizes = {5, 4, 2};
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
}
