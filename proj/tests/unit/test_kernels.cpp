#include <cmath>
#include <omp.h>

#include "asp/errors.hpp"
#include "asp/kernels.hpp"
#include "doctest.h"

using namespace asp;

namespace {

std::vector<Observation> RandomBatch(Rng& rng, int n) {
  std::vector<Observation> out(n);
  for (Observation& obs : out) {
    for (double& g : obs.gripper) g = 2.0 * UniformUnit(rng) - 1.0;
    obs.objects.resize(kObjectFeatures * (1 + UniformInt(rng, 3)));
    for (double& v : obs.objects) v = 2.0 * UniformUnit(rng) - 1.0;
  }
  return out;
}

double Loss(std::size_t i, const PolicyOutput& out, OutputGradient& g) {
  const Action a = Action::FromIndex(static_cast<int>(i % kNumActions));
  const double lp = LogProbAndEntropy(out, a).log_prob;
  AddLogProbGradient(out, a, -1.0, g.logits);
  g.value = out.value;
  return -lp + 0.5 * out.value * out.value;
}

}  // namespace

TEST_CASE("parallel gradient equals the serial reference") {
  Rng rng = MakeRng(1);
  ArchitectureSpec spec;
  spec.object_embed_widths = {16};
  spec.trunk_widths = {16};
  const ParamVector p = InitParams(spec, 3, InitOptions{1.0, 1.0});
  for (int n : {1, 15, 16, 17, 100}) {
    const auto batch = RandomBatch(rng, n);
    std::vector<const Observation*> rows;
    for (const auto& o : batch) rows.push_back(&o);
    const BatchGradient par = ComputeBatchGradient(p, rows, Loss);
    const BatchGradient ser = ComputeBatchGradientSerial(p, rows, Loss);
    CHECK(par.loss == doctest::Approx(ser.loss).epsilon(1e-12));
    REQUIRE(par.gradient.size() == ser.gradient.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < par.gradient.size(); ++k) {
      worst = std::max(worst, std::abs(par.gradient[k] - ser.gradient[k]));
    }
    CHECK(worst < 1e-10);
    // Repeated parallel runs are bitwise identical.
    CHECK(ComputeBatchGradient(p, rows, Loss).gradient == par.gradient);
  }
}

TEST_CASE("parallel gradient does not depend on the thread count") {
  Rng rng = MakeRng(2);
  ArchitectureSpec spec;
  spec.object_embed_widths = {8};
  spec.trunk_widths = {8};
  const ParamVector p = InitParams(spec, 3, InitOptions{1.0, 1.0});
  const auto batch = RandomBatch(rng, 70);
  std::vector<const Observation*> rows;
  for (const auto& o : batch) rows.push_back(&o);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = ComputeBatchGradient(p, rows, Loss).gradient;
  omp_set_num_threads(4);
  const auto four = ComputeBatchGradient(p, rows, Loss).gradient;
  omp_set_num_threads(saved);
  CHECK(one == four);
}

TEST_CASE("non-finite loss is reported") {
  ArchitectureSpec spec;
  spec.object_embed_widths = {4};
  spec.trunk_widths = {4};
  const ParamVector p = InitParams(spec, 3);
  Observation obs;
  obs.objects.assign(kObjectFeatures, 0.0);
  const Observation* rows[] = {&obs};
  const SampleLossFn bad = [](std::size_t, const PolicyOutput&, OutputGradient& g) {
    g.value = std::nan("");
    return 0.0;
  };
  CHECK_THROWS_AS(ComputeBatchGradient(p, rows, bad), NumericError);
  CHECK_THROWS_AS(ComputeBatchGradientSerial(p, rows, bad), NumericError);
  const SampleLossFn throws = [](std::size_t, const PolicyOutput&, OutputGradient&) -> double {
    throw ValidationError("boom");
  };
  CHECK_THROWS_AS(ComputeBatchGradient(p, rows, throws), ValidationError);
}
