#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asp/env.hpp"
#include "asp/observation.hpp"
#include "asp/random.hpp"

namespace asp {

inline constexpr int kNumLogits = 5 + 4 + 3;
inline constexpr std::array<int, kNumActionFactors> kFactorOffsets = {0, 5, 9};

// Layer widths of the permutation-invariant policy and value networks.
// Each network: shared per-object embedding MLP -> max-pool over objects ->
// concat gripper features -> trunk MLP -> linear head. Hidden layers use tanh.
struct ArchitectureSpec {
  std::vector<int> object_embed_widths{64, 64};
  std::vector<int> trunk_widths{128, 64};
  std::array<int, kNumActionFactors> action_factor_sizes = kActionFactorSizes;
  // false: one network with a 13-wide head (12 logits + value).
  bool separate_value_net = true;

  void Validate() const;
  std::size_t ParamCount() const;
  bool operator==(const ArchitectureSpec&) const = default;
};

struct ParamVector {
  std::vector<double> values;
  ArchitectureSpec spec;
  std::uint64_t version = 0;  // training step the snapshot was taken at

  bool operator==(const ParamVector&) const = default;
};

struct InitOptions {
  // Multiplies the fan-in bound of the policy head; 0 gives uniform actions.
  double policy_head_scale = 0.01;
  double value_head_scale = 1.0;

  bool operator==(const InitOptions&) const = default;
};

// Weights ~ U(-s/sqrt(fan_in), s/sqrt(fan_in)), biases zero.
ParamVector InitParams(const ArchitectureSpec& spec, std::uint64_t seed,
                       const InitOptions& options = {});

struct PolicyOutput {
  std::array<double, kNumLogits> logits{};
  double value = 0.0;

  std::span<const double> FactorLogits(int factor) const {
    return {logits.data() + kFactorOffsets[factor],
            static_cast<std::size_t>(kActionFactorSizes[factor])};
  }
};

// dLoss/dOutput for one sample, consumed by Backward.
struct OutputGradient {
  std::array<double, kNumLogits> logits{};
  double value = 0.0;
};

// Activations kept from Forward for the reverse pass. Reusable across calls.
struct TowerCache {
  std::vector<std::vector<double>> embed;  // per layer: n_objects x width
  std::vector<int> argmax;                 // pooled unit -> winning object
  std::vector<double> pooled_input;        // pooled embedding ++ gripper
  std::vector<std::vector<double>> trunk;  // per layer activations
  std::vector<double> head;
};

struct ForwardCache {
  TowerCache policy;
  TowerCache value;
};

// Throws ValidationError when the observation width does not match.
PolicyOutput Forward(const ParamVector& params, const Observation& obs);
PolicyOutput Forward(const ParamVector& params, const Observation& obs,
                     ForwardCache& cache);

// Accumulates dLoss/dParams for one sample into `grad` (ParamCount long).
void Backward(const ParamVector& params, const Observation& obs,
              const ForwardCache& cache, const OutputGradient& upstream,
              std::span<double> grad);

// Index range of each network inside the flat vector.
struct ParamLayout {
  std::size_t policy_begin = 0, policy_end = 0;
  std::size_t value_begin = 0, value_end = 0;  // empty when shared
};
ParamLayout LayoutOf(const ArchitectureSpec& spec);

// Per-factor log-softmax of the logits.
std::array<double, kNumLogits> LogSoftmax(const PolicyOutput& out);

struct SampledAction {
  Action action;
  double log_prob = 0.0;
};

// Samples each factor independently from its softmax.
SampledAction SampleAction(const PolicyOutput& out, Rng& rng);

struct LogProbEntropy {
  double log_prob = 0.0;
  double entropy = 0.0;
};
LogProbEntropy LogProbAndEntropy(const PolicyOutput& out, const Action& action);

// Writes dLogProb/dLogits scaled by `scale` into `grad` (adds).
void AddLogProbGradient(const PolicyOutput& out, const Action& action,
                        double scale, std::array<double, kNumLogits>& grad);
// Writes dEntropy/dLogits scaled by `scale` into `grad` (adds).
void AddEntropyGradient(const PolicyOutput& out, double scale,
                        std::array<double, kNumLogits>& grad);

std::string DescribeSpec(const ArchitectureSpec& spec);

}  // namespace asp
