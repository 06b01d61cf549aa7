#pragma once
// Deterministic, platform-independent randomness.
//
// Every random choice in the library flows from a 64-bit master seed through
// named derivation paths (experiment -> session -> stream), so a run is fully
// reproducible from its manifest regardless of compiler, libc or thread
// count.  std::* distributions are deliberately avoided: their outputs are
// implementation-defined.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace dataring {

// splitmix64 (Steele, Lea, Vigna). Passes BigCrush; one multiply-xor chain
// per draw, and trivially seedable from any 64-bit value.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t u64() { return splitmix64_next(state_); }

  // Unbiased uniform draw from [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = u64();
    } while (x >= limit);
    return x % n;
  }

  // Uniform in (0, 1]: 53-bit mantissa, never exactly zero (safe for log()).
  double unit_pos() {
    return static_cast<double>((u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Laplace(0, b) as sign * Exponential(1/b); density (1/2b)·e^{-|x|/b}.
  double laplace(double b) {
    const bool negative = (u64() & 1) != 0;
    const double mag = -b * std::log(unit_pos());
    return negative ? -mag : mag;
  }

  // The protocol encrypts integers; Laplace draws are rounded to nearest.
  std::int64_t laplace_int(double b) {
    return std::llround(laplace(b));
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream from a master seed and a path of tags.
// Each path element is absorbed with one full splitmix64 scramble, so
// (master, {a,b}) and (master, {b,a}) disagree.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master;
  splitmix64_next(s);
  for (std::uint64_t tag : path) {
    s ^= tag;
    splitmix64_next(s);
  }
  return s;
}

inline Rng derive_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

// Fisher-Yates; the single shuffle implementation shared by every caller so
// coupled replays consume identical draws.
template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

// Stream tags. Plain and encrypted session backends consume identical draws
// from every stream except kNonce, which only the encrypted backend touches —
// that is what makes the two backends verdict-for-verdict comparable.
namespace stream {
inline constexpr std::uint64_t kPermutation = 0x7065726d01ULL;
inline constexpr std::uint64_t kSelector    = 0x73656c6501ULL;
inline constexpr std::uint64_t kNonce       = 0x6e6f6e6301ULL;
inline constexpr std::uint64_t kSchedule    = 0x7363686401ULL;
inline constexpr std::uint64_t kNoise       = 0x6e6f697301ULL;
inline constexpr std::uint64_t kCheat       = 0x6368656101ULL;
inline constexpr std::uint64_t kDataset     = 0x6474736501ULL;
inline constexpr std::uint64_t kFiller      = 0x66696c6c01ULL;
inline constexpr std::uint64_t kBackground  = 0x626b677201ULL;
inline constexpr std::uint64_t kKeygen      = 0x6b65797301ULL;
}  // namespace stream

}  // namespace dataring
