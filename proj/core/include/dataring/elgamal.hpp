#pragma once
// Additive-homomorphic EC-ElGamal: Enc_K(x; r) = (r*B, x*B + r*K).
// Supports collective keys (sum of party keys), staged threshold decryption,
// staged re-encryption to a fresh key without intermediate decryption, and
// re-randomization.  Plaintexts live in a small signed window and are
// recovered with a baby-step/giant-step table.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dataring/group.hpp"
#include "dataring/rng.hpp"

namespace dataring {

inline constexpr std::size_t kCiphertextBytes = 2 * kPointBytes;  // 66

using CiphertextBytes = std::array<std::uint8_t, kCiphertextBytes>;

struct KeyPair {
  Bn secret;   // k in [1, q-1]
  Point pub;   // K = k*B
};

struct Ciphertext {
  Point c1;  // r*B
  Point c2;  // x*B + r*K
};

// Raised when a decrypted value falls outside the decode window.
class DecodeOverflow : public std::runtime_error {
 public:
  explicit DecodeOverflow(std::int64_t window)
      : std::runtime_error("decoded plaintext outside window [-" + std::to_string(window) +
                           ", " + std::to_string(window) + "]") {}
};

// Discrete-log recovery over the symmetric window [-W, W].  Construction
// costs O(sqrt(W)) group operations; decode costs O(sqrt(W)) worst case with
// an O(1) fast path for 0 and 1 (the dominant plaintexts in this protocol).
class DecodeWindow {
 public:
  DecodeWindow(const EcGroup& group, std::int64_t w);

  std::int64_t window() const { return w_; }
  std::optional<std::int64_t> decode(const Point& x_point) const;

 private:
  const EcGroup& group_;
  std::int64_t w_;
  std::int64_t step_;
  std::unordered_map<std::string, std::int64_t> baby_;  // j*B for j in [0, step)
  Point generator_;
  Point neg_step_;  // -(step*B)
};

KeyPair keygen(const EcGroup& group, Rng& rng);

// Sum of at least two party public keys.
Point collective_key(const EcGroup& group, const std::vector<Point>& parts);

Ciphertext encrypt(const EcGroup& group, const Point& key, std::int64_t x, Rng& rng);

// X = c2 - k*c1, then window decode; nullopt when X is outside the window.
std::optional<std::int64_t> try_decrypt(const EcGroup& group, const Bn& secret,
                                        const DecodeWindow& window, const Ciphertext& ct);
std::int64_t decrypt(const EcGroup& group, const Bn& secret, const DecodeWindow& window,
                     const Ciphertext& ct);

Ciphertext add(const EcGroup& group, const Ciphertext& a, const Ciphertext& b);
Ciphertext scalar_mul(const EcGroup& group, const Ciphertext& ct, const Bn& alpha);

// Adds a fresh encryption of zero under `key`.
Ciphertext rerandomize(const EcGroup& group, const Point& key, const Ciphertext& ct, Rng& rng);

// Staged threshold decryption under a collective key: each holder applies its
// stage (c2 <- c2 - k_i*c1); once every share has been applied, c2 = x*B and
// finish_decrypt recovers x.
Ciphertext apply_decrypt_stage(const EcGroup& group, const Bn& secret, const Ciphertext& ct);
std::optional<std::int64_t> finish_decrypt(const EcGroup& group, const DecodeWindow& window,
                                           const Ciphertext& ct);

// Staged re-encryption from the collective key to `target`: each stage strips
// one key share and layers fresh randomness under the target key, so no stage
// ever sees the plaintext.  After all stages, take_result() is a valid
// encryption of the original plaintext under `target`.
struct ReencryptionState {
  Point a_orig;    // original c1 (kept fixed; stages strip shares against it)
  Point a_target;  // accumulating first component under the target key
  Point b;         // second component being transformed
};

ReencryptionState begin_reencrypt(const Ciphertext& ct, const EcGroup& group);
void reencrypt_stage(const EcGroup& group, const Bn& secret, const Point& target,
                     ReencryptionState& state, Rng& rng);
Ciphertext finish_reencrypt(ReencryptionState&& state);

CiphertextBytes ciphertext_to_bytes(const EcGroup& group, const Ciphertext& ct);
Ciphertext ciphertext_from_bytes(const EcGroup& group, const CiphertextBytes& bytes);

}  // namespace dataring
