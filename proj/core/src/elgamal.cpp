#include "dataring/elgamal.hpp"

#include <cmath>

namespace dataring {

namespace {

std::string key_of(const EcGroup& group, const Point& p) {
  PointBytes b = group.to_bytes(p);
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

}  // namespace

DecodeWindow::DecodeWindow(const EcGroup& group, std::int64_t w)
    : group_(group), w_(w), generator_(group.generator()) {
  if (w < 1) throw std::invalid_argument("decode window must be at least 1");
  const std::int64_t span = 2 * w_ + 1;
  step_ = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(span))));
  baby_.reserve(static_cast<std::size_t>(step_));
  Point p = group_.identity();
  for (std::int64_t j = 0; j < step_; ++j) {
    baby_.emplace(key_of(group_, p), j);
    p = group_.add(p, generator_);
  }
  neg_step_ = group_.sub(group_.identity(), group_.generator_mul(Bn(static_cast<std::uint64_t>(step_))));
}

std::optional<std::int64_t> DecodeWindow::decode(const Point& x_point) const {
  if (group_.is_identity(x_point)) return 0;
  if (group_.equal(x_point, generator_)) return 1;
  const std::int64_t span = 2 * w_ + 1;
  // Shift by W so the search range is [0, 2W]; write x + W = i*step + j.
  Point cur = group_.add(x_point, group_.generator_mul(Bn(static_cast<std::uint64_t>(w_))));
  const std::int64_t giant_steps = (span + step_ - 1) / step_;
  for (std::int64_t i = 0; i < giant_steps; ++i) {
    auto it = baby_.find(key_of(group_, cur));
    if (it != baby_.end()) {
      const std::int64_t shifted = i * step_ + it->second;
      if (shifted >= span) return std::nullopt;  // alias just past the window edge
      return shifted - w_;
    }
    cur = group_.add(cur, neg_step_);
  }
  return std::nullopt;
}

KeyPair keygen(const EcGroup& group, Rng& rng) {
  Bn secret = group.rand_scalar(rng);
  Point pub = group.generator_mul(secret);
  return KeyPair{std::move(secret), std::move(pub)};
}

Point collective_key(const EcGroup& group, const std::vector<Point>& parts) {
  if (parts.size() < 2) throw std::invalid_argument("collective key needs at least two parties");
  Point acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = group.add(acc, parts[i]);
  return acc;
}

Ciphertext encrypt(const EcGroup& group, const Point& key, std::int64_t x, Rng& rng) {
  Bn r = group.rand_scalar(rng);
  Point c1 = group.generator_mul(r);
  Point c2 = group.add(group.generator_mul(group.scalar_from_signed(x)), group.mul(key, r));
  return Ciphertext{std::move(c1), std::move(c2)};
}

std::optional<std::int64_t> try_decrypt(const EcGroup& group, const Bn& secret,
                                        const DecodeWindow& window, const Ciphertext& ct) {
  Point x_point = group.sub(ct.c2, group.mul(ct.c1, secret));
  return window.decode(x_point);
}

std::int64_t decrypt(const EcGroup& group, const Bn& secret, const DecodeWindow& window,
                     const Ciphertext& ct) {
  auto x = try_decrypt(group, secret, window, ct);
  if (!x) throw DecodeOverflow(window.window());
  return *x;
}

Ciphertext add(const EcGroup& group, const Ciphertext& a, const Ciphertext& b) {
  return Ciphertext{group.add(a.c1, b.c1), group.add(a.c2, b.c2)};
}

Ciphertext scalar_mul(const EcGroup& group, const Ciphertext& ct, const Bn& alpha) {
  return Ciphertext{group.mul(ct.c1, alpha), group.mul(ct.c2, alpha)};
}

Ciphertext rerandomize(const EcGroup& group, const Point& key, const Ciphertext& ct, Rng& rng) {
  return add(group, ct, encrypt(group, key, 0, rng));
}

Ciphertext apply_decrypt_stage(const EcGroup& group, const Bn& secret, const Ciphertext& ct) {
  return Ciphertext{ct.c1, group.sub(ct.c2, group.mul(ct.c1, secret))};
}

std::optional<std::int64_t> finish_decrypt(const EcGroup& group, const DecodeWindow& window,
                                           const Ciphertext& ct) {
  (void)group;
  return window.decode(ct.c2);
}

ReencryptionState begin_reencrypt(const Ciphertext& ct, const EcGroup& group) {
  return ReencryptionState{ct.c1, group.identity(), ct.c2};
}

void reencrypt_stage(const EcGroup& group, const Bn& secret, const Point& target,
                     ReencryptionState& state, Rng& rng) {
  Bn v = group.rand_scalar(rng);
  // b <- b - k_i*a_orig + v*U ; a_target <- a_target + v*B
  state.b = group.add(group.sub(state.b, group.mul(state.a_orig, secret)), group.mul(target, v));
  state.a_target = group.add(state.a_target, group.generator_mul(v));
}

Ciphertext finish_reencrypt(ReencryptionState&& state) {
  return Ciphertext{std::move(state.a_target), std::move(state.b)};
}

CiphertextBytes ciphertext_to_bytes(const EcGroup& group, const Ciphertext& ct) {
  CiphertextBytes out{};
  PointBytes c1 = group.to_bytes(ct.c1);
  PointBytes c2 = group.to_bytes(ct.c2);
  std::copy(c1.begin(), c1.end(), out.begin());
  std::copy(c2.begin(), c2.end(), out.begin() + kPointBytes);
  return out;
}

Ciphertext ciphertext_from_bytes(const EcGroup& group, const CiphertextBytes& bytes) {
  PointBytes c1{};
  PointBytes c2{};
  std::copy(bytes.begin(), bytes.begin() + kPointBytes, c1.begin());
  std::copy(bytes.begin() + kPointBytes, bytes.end(), c2.begin());
  return Ciphertext{group.from_bytes(c1), group.from_bytes(c2)};
}

}  // namespace dataring
