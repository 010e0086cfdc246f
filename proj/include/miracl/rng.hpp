// Seedable RNG streams with portable distributions.
//
// std::mt19937_64 is bit-reproducible across standard libraries, but the
// <random> distributions are not, so all draws are implemented here.
// Sub-streams are derived from a master seed by splitmix64 chaining, which
// keeps every component of a run (env, policy init, weights, ...) on its
// own independent deterministic stream.
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace miracl {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent seed from a master seed and a path of ids.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master;
  std::uint64_t out = splitmix64(s);
  for (std::uint64_t id : path) {
    s ^= id + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    out = splitmix64(s);
  }
  return out;
}

// Named top-level sub-streams hanging off an experiment's master seed.
enum class Stream : std::uint64_t {
  Env = 1,
  PolicyInit = 2,
  Weights = 3,
  Psa = 4,
  Nsga2 = 5,
  Rollout = 6,
  Bounds = 7,
  Eval = 8,
  Task = 9,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t a = 0, std::uint64_t b = 0) {
  return derive_seed(master, {static_cast<std::uint64_t>(s), a, b});
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], both inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Rejection-free modulo is fine here: span is tiny relative to 2^64.
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  /// Standard normal via Box-Muller (uncached, two uniforms per draw).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Poisson draw (Knuth). Adequate for the lambdas used here (< ~500).
  std::int64_t poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    double prod = 1.0;
    std::int64_t k = -1;
    do {
      ++k;
      prod *= uniform();
    } while (prod > limit);
    return k;
  }

  /// Unit-rate exponential.
  double exponential() { return -std::log(1.0 - uniform()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace miracl
