#pragma once

#include <cstdint>
#include <random>

namespace asp {

// All randomness flows through an explicitly seeded engine. The helpers below
// avoid std::*_distribution so sampled streams are identical across standard
// library implementations.
using Rng = std::mt19937_64;

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent child seed from a parent seed and a stream index.
inline std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t stream) {
  return SplitMix64(SplitMix64(parent) ^ SplitMix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng MakeRng(std::uint64_t seed) { return Rng(SplitMix64(seed)); }

// Uniform double in [0, 1).
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
inline int UniformInt(Rng& rng, int n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<int>(x % range);
}

inline bool Bernoulli(Rng& rng, double p) { return UniformUnit(rng) < p; }

}  // namespace asp
