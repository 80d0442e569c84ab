#pragma once

#include <cmath>
#include <cstdint>

namespace scalekit {

/// splitmix64 (Sebastiano Vigna, 2015), the generator behind all seeded
/// fixtures in this project. The full algorithm is the dozen lines below,
/// so a reimplementation in any language that has 64-bit integers and IEEE
/// doubles reproduces the streams bit-exactly. Consumption order is part of
/// each caller's contract (see synthgen).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal variate: Box-Muller, cosine branch only, consuming
  /// exactly two u64 draws. u1 lies in (0, 1], u2 in [0, 1).
  double next_normal() {
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace scalekit
