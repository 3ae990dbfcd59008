// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace planerf {

// Stateless 64-bit mixer, used to derive independent sub-seeds
// (per frame, per ray, per step) from a master seed.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  return splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
}

// Seeded generator with fully specified output mapping. std::mt19937_64's
// bit stream is pinned by the standard; the float/int conversions below are
// ours, so sequences are reproducible across compilers and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) { return eng_() % n; }

  // Standard normal via Box-Muller (no caching, one value per call).
  double normal() {
    double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double sigma) { return sigma * normal(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace planerf
