#include "asp/kernels.hpp"

#include <cmath>
#include <exception>
#include <string>

#include <omp.h>

#include "asp/errors.hpp"

namespace asp {

namespace {

void CheckFinite(const std::vector<double>& grad, double loss) {
  if (!std::isfinite(loss)) throw NumericError("non-finite batch loss");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericError("non-finite gradient at parameter " +
                         std::to_string(i));
    }
  }
}

}  // namespace

BatchGradient ComputeBatchGradient(const ParamVector& params,
                                   std::span<const Observation* const> batch,
                                   const SampleLossFn& loss) {
  const std::size_t n_params = params.values.size();
  const std::size_t n_chunks = (batch.size() + kGradientChunk - 1) / kGradientChunk;
  std::vector<std::vector<double>> partial(n_chunks);
  std::vector<double> partial_loss(n_chunks, 0.0);
  std::vector<std::exception_ptr> errors(n_chunks);

#pragma omp parallel
  {
    ForwardCache cache;
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
      try {
        std::vector<double>& g = partial[c];
        g.assign(n_params, 0.0);
        const std::size_t begin = c * kGradientChunk;
        const std::size_t end = std::min(batch.size(), begin + kGradientChunk);
        for (std::size_t i = begin; i < end; ++i) {
          const PolicyOutput out = Forward(params, *batch[i], cache);
          OutputGradient upstream;
          partial_loss[c] += loss(i, out, upstream);
          Backward(params, *batch[i], cache, upstream, g);
        }
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  BatchGradient result;
  result.gradient.assign(n_params, 0.0);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const std::vector<double>& g = partial[c];
    for (std::size_t k = 0; k < n_params; ++k) result.gradient[k] += g[k];
    result.loss += partial_loss[c];
  }
  CheckFinite(result.gradient, result.loss);
  return result;
}

BatchGradient ComputeBatchGradientSerial(
    const ParamVector& params, std::span<const Observation* const> batch,
    const SampleLossFn& loss) {
  BatchGradient result;
  result.gradient.assign(params.values.size(), 0.0);
  ForwardCache cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const PolicyOutput out = Forward(params, *batch[i], cache);
    OutputGradient upstream;
    result.loss += loss(i, out, upstream);
    Backward(params, *batch[i], cache, upstream, result.gradient);
  }
  CheckFinite(result.gradient, result.loss);
  return result;
}

}  // namespace asp
