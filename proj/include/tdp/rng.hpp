#pragma once

#include <cstdint>
#include <random>

namespace tdp {

using Rng = std::mt19937_64;

// Uniform double in [lo, hi), built from the top 53 bits of the generator.
// Hand-rolled so that results are identical across standard libraries.
inline double uniform(Rng& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

inline bool bernoulli(Rng& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

// Unbiased draw from [0, n) by rejection.
inline std::uint64_t bounded(Rng& rng, std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <typename T>
void shuffle(Rng& rng, std::vector<T>& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

// Draw an index from unnormalized non-negative weights.
inline std::size_t sample_index(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double r = uniform(rng, 0.0, total);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    r -= weights[i];
    if (r < 0.0) return i;
  }
  return weights.size() - 1;
}

}  // namespace tdp
