#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "asp/observation.hpp"
#include "asp/policy_net.hpp"

namespace asp {

// Per-sample loss callback: fills dLoss/dOutput for sample `index` and returns
// the sample's loss contribution. Must be safe to call concurrently.
using SampleLossFn = std::function<double(std::size_t index,
                                          const PolicyOutput& output,
                                          OutputGradient& grad)>;

struct BatchGradient {
  std::vector<double> gradient;
  double loss = 0.0;
};

// Samples per reduction chunk. Chunk partial sums are combined in chunk order,
// so the parallel result does not depend on the thread count.
inline constexpr std::size_t kGradientChunk = 16;

// OpenMP kernel: forward + reverse pass over every sample, reduced over
// fixed-size chunks. Throws NumericError on a non-finite gradient.
BatchGradient ComputeBatchGradient(const ParamVector& params,
                                   std::span<const Observation* const> batch,
                                   const SampleLossFn& loss);

// Serial reference: one accumulator, samples in order.
BatchGradient ComputeBatchGradientSerial(
    const ParamVector& params, std::span<const Observation* const> batch,
    const SampleLossFn& loss);

}  // namespace asp
