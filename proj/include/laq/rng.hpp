#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace laq {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent seed for a named sub-stream (trial, sweep, record, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Counter-based uniform in [0, 1), so record-wise transforms do not depend
/// on visiting order.
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(derive_seed(seed, counter) >> 11) * 0x1.0p-53;
}

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline int uniform_int(Rng& rng, int n) {
  return static_cast<int>(uniform01(rng) * n);
}

/// Inverse-CDF draw from a discrete distribution given by `probs`.
inline int sample_discrete(double u, const double* probs, int n) {
  double acc = 0.0;
  int last = 0;
  for (int i = 0; i < n; ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

}  // namespace laq
