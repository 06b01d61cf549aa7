#pragma once
// Cipher context shared by the protocol roles.  Two modes with one protocol
// code path:
//   - encrypted: real EC-ElGamal under the servers' collective key;
//   - plain: plaintext integers in same-width slots, for large Monte-Carlo
//     runs where the crypto layer is not under test.
// Both modes consume identical randomness from every stream except the nonce
// streams, which only the encrypted mode touches, so session-level decisions
// (schedules, noise, cheat draws, verdicts) are mode-independent.

#include <cstdint>
#include <optional>

#include "dataring/elgamal.hpp"
#include "dataring/group.hpp"
#include "dataring/rng.hpp"

namespace dataring {

// One protocol value: a ciphertext slot or its plain-mode stand-in.  Wire
// width is kCiphertextBytes (66) in both modes.
struct Slot {
  Ciphertext ct;            // encrypted mode only
  std::int64_t plain = 0;   // plain mode only
};

class CipherContext {
 public:
  // Generates both server key pairs from `keygen_rng` and forms K_S.
  static CipherContext make_encrypted(const EcGroup& group, std::int64_t window_w,
                                      Rng& keygen_rng);
  static CipherContext make_plain(std::int64_t window_w);

  bool encrypted() const { return group_ != nullptr; }
  std::int64_t window() const { return window_w_; }

  // Simulator-internal key material; role separation is enforced by the
  // message flow, not by hiding these accessors.
  const KeyPair& s1_keys() const;
  const KeyPair& s2_keys() const;
  const Point& collective() const { return k_s_; }

  KeyPair make_recipient_key(Rng& keygen_rng) const;

  Slot encrypt(std::int64_t x, Rng& nonce_rng) const;  // under K_S
  Slot add(const Slot& a, const Slot& b) const;
  Slot rerandomize(const Slot& s, Rng& nonce_rng) const;

  // Both decryption stages applied in sequence (verification paths).
  std::optional<std::int64_t> joint_decrypt(const Slot& s) const;

  // Staged re-encryption to `target` (never decrypts in between).
  Slot reencrypt(const Slot& s, const Point& target, Rng& s1_nonce, Rng& s2_nonce) const;

  std::optional<std::int64_t> recipient_decrypt(const KeyPair& recipient, const Slot& s) const;

  CiphertextBytes serialize(const Slot& s) const;
  Slot deserialize(const CiphertextBytes& bytes) const;

 private:
  CipherContext() = default;
  const EcGroup* group_ = nullptr;
  std::optional<DecodeWindow> window_;
  std::int64_t window_w_ = 0;
  std::optional<KeyPair> s1_, s2_;
  Point k_s_;
};

}  // namespace dataring
