#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace wiggle::rng {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

/// Stateless counter-based draw: the `counter`-th 64-bit value of the stream keyed by `seed`.
constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t counter) {
  return mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + (counter + 1) * kGamma);
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential SplitMix64 stream with portable uniform and normal variates.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_bits() { return counter_bits(seed_, counter_++); }
  double uniform() { return to_unit(next_bits()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one variate per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace wiggle::rng
