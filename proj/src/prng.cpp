// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/prng.hpp"

#include <utility>

namespace ja4ml {

std::vector<std::uint32_t> seeded_permutation(std::uint32_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> perm(n);
  for (std::uint32_t i = 0; i < n; ++i) perm[i] = i;
  SplitMix64 rng(seed);
  for (std::uint32_t i = n; i-- > 1;) {
    const auto j = static_cast<std::uint32_t>(rng.below(std::uint64_t{i} + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

} // namespace ja4ml
