#include "dataring/group.hpp"

#include <openssl/err.h>
#include <openssl/objects.h>

#include <cstring>
#include <stdexcept>

namespace dataring {

static_assert(EcGroup::kDefaultCurveNid == NID_X9_62_prime256v1,
              "default curve constant out of sync with OpenSSL headers");

namespace {

[[noreturn]] void throw_openssl(const char* what) {
  unsigned long code = ERR_get_error();
  char buf[256] = {0};
  if (code != 0) ERR_error_string_n(code, buf, sizeof(buf));
  throw std::runtime_error(std::string(what) + (code ? std::string(": ") + buf : ""));
}

BN_CTX* ctx() {
  thread_local struct Holder {
    BN_CTX* c = BN_CTX_new();
    ~Holder() { BN_CTX_free(c); }
  } holder;
  if (!holder.c) throw_openssl("BN_CTX_new");
  return holder.c;
}

}  // namespace

Bn::Bn() : bn_(BN_new()) {
  if (!bn_) throw_openssl("BN_new");
  BN_zero(bn_);
}

Bn::Bn(std::uint64_t value) : bn_(BN_new()) {
  if (!bn_) throw_openssl("BN_new");
  if (!BN_set_word(bn_, value)) throw_openssl("BN_set_word");
}

Bn::Bn(const Bn& other) : bn_(BN_dup(other.bn_)) {
  if (!bn_) throw_openssl("BN_dup");
}

Bn::Bn(Bn&& other) noexcept : bn_(other.bn_) { other.bn_ = nullptr; }

Bn& Bn::operator=(const Bn& other) {
  if (this != &other) {
    BIGNUM* copy = BN_dup(other.bn_);
    if (!copy) throw_openssl("BN_dup");
    BN_clear_free(bn_);
    bn_ = copy;
  }
  return *this;
}

Bn& Bn::operator=(Bn&& other) noexcept {
  if (this != &other) {
    BN_clear_free(bn_);
    bn_ = other.bn_;
    other.bn_ = nullptr;
  }
  return *this;
}

Bn::~Bn() { BN_clear_free(bn_); }

Bn Bn::from_bytes_be(const std::uint8_t* data, std::size_t len) {
  Bn out;
  if (!BN_bin2bn(data, static_cast<int>(len), out.bn_)) throw_openssl("BN_bin2bn");
  return out;
}

std::array<std::uint8_t, kScalarBytes> Bn::to_bytes_be() const {
  std::array<std::uint8_t, kScalarBytes> out{};
  if (BN_bn2binpad(bn_, out.data(), static_cast<int>(out.size())) < 0)
    throw_openssl("BN_bn2binpad");
  return out;
}

bool Bn::operator==(const Bn& other) const { return BN_cmp(bn_, other.bn_) == 0; }

Point::Point(const Point& other) : point_(nullptr), group_(other.group_) {
  if (other.point_) {
    point_ = EC_POINT_dup(other.point_, other.group_);
    if (!point_) throw_openssl("EC_POINT_dup");
  }
}

Point::Point(Point&& other) noexcept : point_(other.point_), group_(other.group_) {
  other.point_ = nullptr;
}

Point& Point::operator=(const Point& other) {
  if (this != &other) {
    EC_POINT* copy = nullptr;
    if (other.point_) {
      copy = EC_POINT_dup(other.point_, other.group_);
      if (!copy) throw_openssl("EC_POINT_dup");
    }
    EC_POINT_free(point_);
    point_ = copy;
    group_ = other.group_;
  }
  return *this;
}

Point& Point::operator=(Point&& other) noexcept {
  if (this != &other) {
    EC_POINT_free(point_);
    point_ = other.point_;
    group_ = other.group_;
    other.point_ = nullptr;
  }
  return *this;
}

Point::~Point() { EC_POINT_free(point_); }

EcGroup::EcGroup(int nid) : group_(EC_GROUP_new_by_curve_name(nid)) {
  if (!group_) throw_openssl("EC_GROUP_new_by_curve_name");
  const BIGNUM* q = EC_GROUP_get0_order(group_);
  if (!q) throw_openssl("EC_GROUP_get0_order");
  if (!BN_copy(order_.get(), q)) throw_openssl("BN_copy");
  // The wire format assumes a fixed compressed width.
  const int field_bits = EC_GROUP_get_degree(group_);
  if (static_cast<std::size_t>((field_bits + 7) / 8 + 1) != kPointBytes)
    throw std::runtime_error("curve incompatible with 33-byte compressed encoding");
}

EcGroup::~EcGroup() { EC_GROUP_free(group_); }

Point EcGroup::generator() const {
  const EC_POINT* base = EC_GROUP_get0_generator(group_);
  EC_POINT* copy = EC_POINT_dup(base, group_);
  if (!copy) throw_openssl("EC_POINT_dup");
  return Point(copy, group_);
}

Point EcGroup::identity() const {
  EC_POINT* p = EC_POINT_new(group_);
  if (!p || !EC_POINT_set_to_infinity(group_, p)) throw_openssl("EC_POINT_set_to_infinity");
  return Point(p, group_);
}

Point EcGroup::generator_mul(const Bn& k) const {
  EC_POINT* p = EC_POINT_new(group_);
  if (!p || !EC_POINT_mul(group_, p, k.get(), nullptr, nullptr, ctx()))
    throw_openssl("EC_POINT_mul (fixed base)");
  return Point(p, group_);
}

Point EcGroup::mul(const Point& p, const Bn& k) const {
  EC_POINT* r = EC_POINT_new(group_);
  if (!r || !EC_POINT_mul(group_, r, nullptr, p.get(), k.get(), ctx()))
    throw_openssl("EC_POINT_mul");
  return Point(r, group_);
}

Point EcGroup::add(const Point& a, const Point& b) const {
  EC_POINT* r = EC_POINT_new(group_);
  if (!r || !EC_POINT_add(group_, r, a.get(), b.get(), ctx())) throw_openssl("EC_POINT_add");
  return Point(r, group_);
}

Point EcGroup::sub(const Point& a, const Point& b) const {
  EC_POINT* neg = EC_POINT_dup(b.get(), group_);
  if (!neg || !EC_POINT_invert(group_, neg, ctx())) {
    EC_POINT_free(neg);
    throw_openssl("EC_POINT_invert");
  }
  EC_POINT* r = EC_POINT_new(group_);
  if (!r || !EC_POINT_add(group_, r, a.get(), neg, ctx())) {
    EC_POINT_free(neg);
    EC_POINT_free(r);
    throw_openssl("EC_POINT_add");
  }
  EC_POINT_free(neg);
  return Point(r, group_);
}

bool EcGroup::equal(const Point& a, const Point& b) const {
  int cmp = EC_POINT_cmp(group_, a.get(), b.get(), ctx());
  if (cmp < 0) throw_openssl("EC_POINT_cmp");
  return cmp == 0;
}

bool EcGroup::is_identity(const Point& p) const {
  return EC_POINT_is_at_infinity(group_, p.get()) == 1;
}

PointBytes EcGroup::to_bytes(const Point& p) const {
  PointBytes out{};
  std::size_t written = EC_POINT_point2oct(group_, p.get(), POINT_CONVERSION_COMPRESSED,
                                           out.data(), out.size(), ctx());
  if (written == 0) throw_openssl("EC_POINT_point2oct");
  if (written == 1) {
    // Identity serializes as a single 0x00: pad to fixed width so every
    // element occupies exactly kPointBytes on the wire.
    out.fill(0);
    return out;
  }
  if (written != kPointBytes) throw std::runtime_error("unexpected point encoding width");
  return out;
}

Point EcGroup::from_bytes(const PointBytes& bytes) const {
  bool all_zero = true;
  for (std::uint8_t b : bytes)
    if (b != 0) {
      all_zero = false;
      break;
    }
  EC_POINT* p = EC_POINT_new(group_);
  if (!p) throw_openssl("EC_POINT_new");
  if (all_zero) {
    if (!EC_POINT_set_to_infinity(group_, p)) {
      EC_POINT_free(p);
      throw_openssl("EC_POINT_set_to_infinity");
    }
    return Point(p, group_);
  }
  if (!EC_POINT_oct2point(group_, p, bytes.data(), bytes.size(), ctx())) {
    EC_POINT_free(p);
    ERR_clear_error();
    throw std::invalid_argument("invalid group element encoding");
  }
  return Point(p, group_);
}

Bn EcGroup::rand_scalar(Rng& rng) const {
  // Rejection-sample a uniform value in [0, q-2], then shift to [1, q-1].
  // q is within 2^-32 of 2^256 for the default curve, so rejection is rare;
  // the loop is still fully portable because all entropy comes from `rng`.
  Bn bound(order_);
  if (!BN_sub_word(bound.get(), 1)) throw_openssl("BN_sub_word");
  Bn value;
  while (true) {
    std::uint8_t buf[kScalarBytes];
    for (std::size_t i = 0; i < kScalarBytes; i += 8) {
      std::uint64_t w = rng.u64();
      for (std::size_t j = 0; j < 8; ++j) buf[i + j] = static_cast<std::uint8_t>(w >> (56 - 8 * j));
    }
    value = Bn::from_bytes_be(buf, sizeof(buf));
    if (BN_cmp(value.get(), bound.get()) < 0) break;
  }
  if (!BN_add_word(value.get(), 1)) throw_openssl("BN_add_word");
  return value;
}

Bn EcGroup::scalar_from_signed(std::int64_t x) const {
  if (x >= 0) return Bn(static_cast<std::uint64_t>(x));
  Bn mag(static_cast<std::uint64_t>(-(x + 1)) + 1);  // |x| without overflow at INT64_MIN
  Bn out(order_);
  if (!BN_sub(out.get(), out.get(), mag.get())) throw_openssl("BN_sub");
  return out;
}

}  // namespace dataring
