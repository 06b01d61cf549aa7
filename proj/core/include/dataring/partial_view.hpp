#pragma once
// Four-step partial-view collection and verification.  Three roles:
//   participant: permutes its indicator, splits lbs (to S1) from sigma^{-1}
//                (to S2);
//   server S1:   replaces 1-flags with popped selector ciphertexts and
//                0-flags with fresh encryptions of zero (never sees sigma);
//   server S2:   re-randomizes everything and un-permutes (never sees flags).
// Verification threshold-decrypts only the background-knowledge positions.

#include <cstdint>
#include <string>
#include <vector>

#include "dataring/backend.hpp"
#include "dataring/dataset.hpp"

namespace dataring {

// Flag sequence in permuted position order: flags[j] = val(sigma^{-1}(j)).
struct PvUpload {
  std::vector<std::uint8_t> flags;
};

struct ParticipantPvOutput {
  PvUpload lbs;                          // for S1
  std::vector<std::uint32_t> sigma_inv;  // for S2; sigma itself never leaves
};

ParticipantPvOutput participant_prepare(const HistogramDataset& ds, std::uint64_t perm_seed);

class ServerOnePvRole {
 public:
  explicit ServerOnePvRole(const CipherContext& ctx) : ctx_(&ctx) {}

  void receive_lbs(PvUpload lbs);
  bool has_lbs() const { return !lbs_.flags.empty(); }

  // Selector: N encrypted bits of Hamming weight exactly v, popped in
  // ascending permuted-position order of the 1-flags; 0-flags get fresh
  // encryptions of zero.  Consumes and clears the stored upload.
  std::vector<Slot> sample(long v, Rng& selector_rng, Rng& nonce_rng);

 private:
  const CipherContext* ctx_;
  PvUpload lbs_;
};

class ServerTwoPvRole {
 public:
  explicit ServerTwoPvRole(const CipherContext& ctx) : ctx_(&ctx) {}

  void receive_sigma_inv(std::vector<std::uint32_t> sigma_inv);
  void receive_encrypted(std::vector<Slot> enc_upload);
  bool has_state() const { return !sigma_inv_.empty() || !enc_.empty(); }

  // Re-randomizes every entry and restores original label order; the stored
  // upload and sigma^{-1} are cleared afterwards (never reused).
  std::vector<Slot> finalize(Rng& nonce_rng);

 private:
  const CipherContext* ctx_;
  std::vector<std::uint32_t> sigma_inv_;
  std::vector<Slot> enc_;
};

struct PvVerdict {
  bool accept = false;
  long matched = 0;        // decrypted 1s among the background positions
  std::vector<int> bits;   // per-background-label decrypted values
  std::string cause;       // set when rejected
};

// Threshold-decrypts only the background positions; accepts iff every value
// is binary and at least r0 positions match.
PvVerdict verify_pv(const CipherContext& ctx, const std::vector<Slot>& pv,
                    const std::vector<std::size_t>& background, long r0);

}  // namespace dataring
