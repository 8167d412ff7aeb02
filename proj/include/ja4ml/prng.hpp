// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace ja4ml {

/// SplitMix64 (Steele, Lea & Flood 2014). All randomness in the toolkit is
/// drawn from this generator so that splits and models can be reproduced
/// from the seed in any language:
///
///   state += 0x9e3779b97f4a7c15
///   z = state
///   z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
///   z = (z ^ (z >> 27)) * 0x94d049bb133111eb
///   return z ^ (z >> 31)
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound) by rejection: draws below
  /// (2^64 - bound) mod bound are discarded, the rest are reduced mod bound.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

/// Fisher-Yates permutation of 0..n-1: for i = n-1 down to 1, swap
/// element i with element below(i + 1).
std::vector<std::uint32_t> seeded_permutation(std::uint32_t n, std::uint64_t seed);

} // namespace ja4ml
