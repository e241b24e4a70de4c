#pragma once

#include <cmath>
#include <cstdint>

namespace calib {

// All randomness in the library flows through this generator: splitmix64 with
// a documented seeding discipline, never OS entropy. Same seed, same platform
// or not, same stream.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a stream index
/// (per-example, per-trial, per-resample streams all use this).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base;
  std::uint64_t h = splitmix64_next(s);
  std::uint64_t t = h ^ (stream * 0xD1342543DE82EF95ull);
  return splitmix64_next(t);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe as a log argument.
  double next_double_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

  /// Uniform integer in [0, bound). Plain modulo: the bias at bound << 2^64 is
  /// far below anything these tools can resolve, and the mapping stays trivial
  /// to reproduce in other languages.
  std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

  /// Standard normal via Box-Muller. Always consumes exactly two draws, so
  /// stream positions stay predictable.
  double normal() {
    double u1 = next_double_open();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 boosted from shape + 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      double u = next_double_open();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = next_double_open();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    double g1 = gamma(a);
    double g2 = gamma(b);
    return g1 / (g1 + g2);
  }

  /// Fisher-Yates shuffle of indices 0..n-1, front to back.
  template <class T>
  void shuffle(T* data, std::uint64_t n) {
    if (n < 2) return;
    for (std::uint64_t i = 0; i + 1 < n; ++i) {
      std::uint64_t j = i + next_below(n - i);
      T tmp = data[i];
      data[i] = data[j];
      data[j] = tmp;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace calib
