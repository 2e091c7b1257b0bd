#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mgeq {

// Counter-based seed derivation. Every stochastic routine takes an explicit
// 64-bit seed; nested loops derive child seeds from (seed, counters...) so
// that serial and parallel execution draw identical samples.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
}

template <typename... Counters>
std::uint64_t derive_seed(std::uint64_t root, Counters... counters) {
  std::uint64_t s = splitmix64(root);
  ((s = seed_mix(s, static_cast<std::uint64_t>(counters))), ...);
  return s;
}

// Small deterministic generator (xoshiro-free: repeated splitmix64 walk).
// std::discrete_distribution et al. have implementation-defined draws, so all
// sampling goes through this class to keep artifacts identical across stdlibs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0xd1b54a32d192ed03ULL)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  // Samples an index from an unnormalized nonnegative weight vector.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("categorical: nonpositive weight sum");
    double u = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  // Exponential(1) via inverse CDF; used for Dirichlet(1,...,1) rows.
  double exponential() {
    double u = next_double();
    return -std::log1p(-u);
  }

 private:
  std::uint64_t state_;
};

}  // namespace mgeq
