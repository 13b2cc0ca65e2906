#pragma once

#include <cstdint>
#include <random>

namespace magsuture {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent per-frame streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) {
  return mix_seed(mix_seed(base ^ mix_seed(stream)) + index);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01(rng) < p;
}

}  // namespace magsuture
