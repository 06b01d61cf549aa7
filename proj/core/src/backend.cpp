#include "dataring/backend.hpp"

#include <stdexcept>
#include <vector>

namespace dataring {

CipherContext CipherContext::make_encrypted(const EcGroup& group, std::int64_t window_w,
                                            Rng& keygen_rng) {
  CipherContext ctx;
  ctx.group_ = &group;
  ctx.window_.emplace(group, window_w);
  ctx.window_w_ = window_w;
  ctx.s1_ = keygen(group, keygen_rng);
  ctx.s2_ = keygen(group, keygen_rng);
  ctx.k_s_ = collective_key(group, {ctx.s1_->pub, ctx.s2_->pub});
  return ctx;
}

CipherContext CipherContext::make_plain(std::int64_t window_w) {
  if (window_w < 1) throw std::invalid_argument("decode window must be at least 1");
  CipherContext ctx;
  ctx.window_w_ = window_w;
  return ctx;
}

const KeyPair& CipherContext::s1_keys() const {
  if (!s1_) throw std::logic_error("plain context has no server keys");
  return *s1_;
}

const KeyPair& CipherContext::s2_keys() const {
  if (!s2_) throw std::logic_error("plain context has no server keys");
  return *s2_;
}

KeyPair CipherContext::make_recipient_key(Rng& keygen_rng) const {
  if (!encrypted()) return KeyPair{};
  return keygen(*group_, keygen_rng);
}

Slot CipherContext::encrypt(std::int64_t x, Rng& nonce_rng) const {
  if (!encrypted()) return Slot{Ciphertext{}, x};
  return Slot{dataring::encrypt(*group_, k_s_, x, nonce_rng), 0};
}

Slot CipherContext::add(const Slot& a, const Slot& b) const {
  if (!encrypted()) return Slot{Ciphertext{}, a.plain + b.plain};
  return Slot{dataring::add(*group_, a.ct, b.ct), 0};
}

Slot CipherContext::rerandomize(const Slot& s, Rng& nonce_rng) const {
  if (!encrypted()) return s;
  return Slot{dataring::rerandomize(*group_, k_s_, s.ct, nonce_rng), 0};
}

std::optional<std::int64_t> CipherContext::joint_decrypt(const Slot& s) const {
  if (!encrypted()) {
    if (s.plain < -window_w_ || s.plain > window_w_) return std::nullopt;
    return s.plain;
  }
  Ciphertext staged = apply_decrypt_stage(*group_, s1_->secret, s.ct);
  staged = apply_decrypt_stage(*group_, s2_->secret, staged);
  return finish_decrypt(*group_, *window_, staged);
}

Slot CipherContext::reencrypt(const Slot& s, const Point& target, Rng& s1_nonce,
                              Rng& s2_nonce) const {
  if (!encrypted()) return s;
  ReencryptionState state = begin_reencrypt(s.ct, *group_);
  reencrypt_stage(*group_, s1_->secret, target, state, s1_nonce);
  reencrypt_stage(*group_, s2_->secret, target, state, s2_nonce);
  return Slot{finish_reencrypt(std::move(state)), 0};
}

std::optional<std::int64_t> CipherContext::recipient_decrypt(const KeyPair& recipient,
                                                             const Slot& s) const {
  if (!encrypted()) {
    if (s.plain < -window_w_ || s.plain > window_w_) return std::nullopt;
    return s.plain;
  }
  return try_decrypt(*group_, recipient.secret, *window_, s.ct);
}

CiphertextBytes CipherContext::serialize(const Slot& s) const {
  if (encrypted()) return ciphertext_to_bytes(*group_, s.ct);
  CiphertextBytes out{};
  std::uint64_t u = static_cast<std::uint64_t>(s.plain);
  for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(u >> (8 * i));
  return out;
}

Slot CipherContext::deserialize(const CiphertextBytes& bytes) const {
  if (encrypted()) return Slot{ciphertext_from_bytes(*group_, bytes), 0};
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(i)]) << (8 * i);
  return Slot{Ciphertext{}, static_cast<std::int64_t>(u)};
}

}  // namespace dataring
