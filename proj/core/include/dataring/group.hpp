#pragma once
// Thin RAII layer over OpenSSL's EC primitives for a prime-order group with
// 33-byte compressed elements (prime256v1 by default; any curve whose
// compressed encoding matches the configured width is accepted).

#include <openssl/bn.h>
#include <openssl/ec.h>

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dataring/rng.hpp"

namespace dataring {

inline constexpr std::size_t kPointBytes = 33;
inline constexpr std::size_t kScalarBytes = 32;

using PointBytes = std::array<std::uint8_t, kPointBytes>;

// Big integer handle (scalars mod the group order).
class Bn {
 public:
  Bn();
  explicit Bn(std::uint64_t value);
  Bn(const Bn& other);
  Bn(Bn&& other) noexcept;
  Bn& operator=(const Bn& other);
  Bn& operator=(Bn&& other) noexcept;
  ~Bn();

  BIGNUM* get() { return bn_; }
  const BIGNUM* get() const { return bn_; }

  static Bn from_bytes_be(const std::uint8_t* data, std::size_t len);
  std::array<std::uint8_t, kScalarBytes> to_bytes_be() const;

  bool operator==(const Bn& other) const;

 private:
  BIGNUM* bn_;
};

class EcGroup;

// Immutable group element.
class Point {
 public:
  Point() : point_(nullptr), group_(nullptr) {}
  Point(const Point& other);
  Point(Point&& other) noexcept;
  Point& operator=(const Point& other);
  Point& operator=(Point&& other) noexcept;
  ~Point();

  bool valid() const { return point_ != nullptr; }
  const EC_POINT* get() const { return point_; }

 private:
  friend class EcGroup;
  Point(EC_POINT* p, const EC_GROUP* g) : point_(p), group_(g) {}
  EC_POINT* point_;
  const EC_GROUP* group_;
};

// Group parameters plus the operations the protocol needs.  All operations
// are const and the underlying OpenSSL context is per-thread, so a single
// EcGroup may be shared freely across threads.
class EcGroup {
 public:
  explicit EcGroup(int nid = kDefaultCurveNid);
  ~EcGroup();
  EcGroup(const EcGroup&) = delete;
  EcGroup& operator=(const EcGroup&) = delete;

  static constexpr int kDefaultCurveNid = 415;  // NID_X9_62_prime256v1

  const EC_GROUP* get() const { return group_; }
  const Bn& order() const { return order_; }
  Point generator() const;

  Point identity() const;
  Point generator_mul(const Bn& k) const;        // k*B (fixed base)
  Point mul(const Point& p, const Bn& k) const;  // k*P
  Point add(const Point& a, const Point& b) const;
  Point sub(const Point& a, const Point& b) const;
  bool equal(const Point& a, const Point& b) const;
  bool is_identity(const Point& p) const;

  PointBytes to_bytes(const Point& p) const;
  Point from_bytes(const PointBytes& bytes) const;

  // Uniform scalar in [1, q-1], derived portably from the caller's Rng
  // (raw 256-bit rejection sampling; no OpenSSL RNG involvement).
  Bn rand_scalar(Rng& rng) const;

  // Signed message x -> scalar x mod q (negative values wrap).
  Bn scalar_from_signed(std::int64_t x) const;

 private:
  EC_GROUP* group_;
  Bn order_;
};

}  // namespace dataring
