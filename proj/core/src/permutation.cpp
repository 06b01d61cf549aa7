#include "dataring/permutation.hpp"

#include <numeric>
#include <stdexcept>

#include "dataring/rng.hpp"

namespace dataring {

Permutation random_permutation(std::size_t size, std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("permutation size must be at least 1");
  if (size > UINT32_MAX) throw std::invalid_argument("permutation size too large");
  Permutation p;
  p.forward.resize(size);
  std::iota(p.forward.begin(), p.forward.end(), std::uint32_t{0});
  Rng rng(seed);
  shuffle_in_place(p.forward, rng);
  p.inverse = invert_permutation(p.forward);
  return p;
}

bool is_permutation(const std::vector<std::uint32_t>& v) {
  std::vector<bool> seen(v.size(), false);
  for (std::uint32_t x : v) {
    if (x >= v.size() || seen[x]) return false;
    seen[x] = true;
  }
  return true;
}

std::vector<std::uint32_t> invert_permutation(const std::vector<std::uint32_t>& v) {
  if (!is_permutation(v)) throw std::invalid_argument("not a permutation");
  std::vector<std::uint32_t> inv(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) inv[v[i]] = static_cast<std::uint32_t>(i);
  return inv;
}

}  // namespace dataring
