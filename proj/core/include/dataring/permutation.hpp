#pragma once
// Seeded random permutations with precomputed inverses.

#include <cstdint>
#include <vector>

namespace dataring {

struct Permutation {
  std::vector<std::uint32_t> forward;  // sigma: original index -> permuted position
  std::vector<std::uint32_t> inverse;  // sigma^{-1}

  std::size_t size() const { return forward.size(); }
};

// Fisher-Yates from the seed; size >= 1.
Permutation random_permutation(std::size_t size, std::uint64_t seed);

// True iff v is a bijection over [0, v.size()).
bool is_permutation(const std::vector<std::uint32_t>& v);

// Inverse of a valid permutation vector (throws otherwise).
std::vector<std::uint32_t> invert_permutation(const std::vector<std::uint32_t>& v);

}  // namespace dataring
