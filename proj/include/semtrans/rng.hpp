#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace semtrans {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Stable seed for a numbered substream of a base seed. Used so that
/// per-probe / per-side sampling streams are independent but reproducible.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream + 1));
}

/// Deterministic random stream. mt19937_64 output is fixed by the standard;
/// the distribution transforms are written out explicitly (std:: variate
/// distributions are implementation-defined and would break bit-for-bit
/// reproducibility of samples).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform draw in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Box-Muller; consumes exactly two engine draws per variate.
  double normal(double mean, double stddev) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  double bernoulli(double p) { return uniform01() < p ? 1.0 : 0.0; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) %
           n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace semtrans
