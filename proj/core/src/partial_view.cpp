#include "dataring/partial_view.hpp"

#include <stdexcept>

#include "dataring/permutation.hpp"

namespace dataring {

ParticipantPvOutput participant_prepare(const HistogramDataset& ds, std::uint64_t perm_seed) {
  const std::size_t d = ds.domain_size();
  if (d == 0) throw std::invalid_argument("empty domain");
  Permutation sigma = random_permutation(d, perm_seed);
  ParticipantPvOutput out;
  out.lbs.flags.assign(d, 0);
  for (std::size_t i = 0; i < d; ++i)
    out.lbs.flags[sigma.forward[i]] = static_cast<std::uint8_t>(ds.val(i));
  out.sigma_inv = std::move(sigma.inverse);
  return out;
}

void ServerOnePvRole::receive_lbs(PvUpload lbs) {
  for (std::uint8_t f : lbs.flags)
    if (f > 1) throw std::invalid_argument("lbs flags must be binary");
  lbs_ = std::move(lbs);
}

std::vector<Slot> ServerOnePvRole::sample(long v, Rng& selector_rng, Rng& nonce_rng) {
  if (!has_lbs()) throw std::logic_error("no lbs upload to sample");
  long n = 0;
  for (std::uint8_t f : lbs_.flags) n += f;
  if (v < 0 || v > n) throw std::invalid_argument("sample size exceeds claimed dataset size");

  // Selector vector: n bits of weight v, uniformly shuffled, then encrypted.
  std::vector<std::uint8_t> selector(static_cast<std::size_t>(n), 0);
  for (long i = 0; i < v; ++i) selector[static_cast<std::size_t>(i)] = 1;
  shuffle_in_place(selector, selector_rng);
  std::vector<Slot> enc_selector;
  enc_selector.reserve(selector.size());
  for (std::uint8_t bit : selector) enc_selector.push_back(ctx_->encrypt(bit, nonce_rng));

  std::vector<Slot> out;
  out.reserve(lbs_.flags.size());
  std::size_t next = 0;
  for (std::uint8_t f : lbs_.flags)
    out.push_back(f ? std::move(enc_selector[next++]) : ctx_->encrypt(0, nonce_rng));
  lbs_.flags.clear();  // deleted after use, never reused
  lbs_.flags.shrink_to_fit();
  return out;
}

void ServerTwoPvRole::receive_sigma_inv(std::vector<std::uint32_t> sigma_inv) {
  if (!is_permutation(sigma_inv)) throw std::invalid_argument("sigma^{-1} is not a permutation");
  sigma_inv_ = std::move(sigma_inv);
}

void ServerTwoPvRole::receive_encrypted(std::vector<Slot> enc_upload) {
  enc_ = std::move(enc_upload);
}

std::vector<Slot> ServerTwoPvRole::finalize(Rng& nonce_rng) {
  if (sigma_inv_.empty() || enc_.empty()) throw std::logic_error("missing upload or permutation");
  if (sigma_inv_.size() != enc_.size())
    throw std::invalid_argument("permutation and upload lengths differ");
  std::vector<Slot> pv(enc_.size());
  // Entry at permuted position j belongs to original label sigma^{-1}(j).
  for (std::size_t j = 0; j < enc_.size(); ++j)
    pv[sigma_inv_[j]] = ctx_->rerandomize(enc_[j], nonce_rng);
  sigma_inv_.clear();  // deleted after use, never reused
  sigma_inv_.shrink_to_fit();
  enc_.clear();
  enc_.shrink_to_fit();
  return pv;
}

PvVerdict verify_pv(const CipherContext& ctx, const std::vector<Slot>& pv,
                    const std::vector<std::size_t>& background, long r0) {
  if (r0 < 1) throw std::invalid_argument("r0 must be at least 1");
  PvVerdict verdict;
  verdict.bits.reserve(background.size());
  for (std::size_t label : background) {
    if (label >= pv.size()) throw std::invalid_argument("background label outside domain");
    auto value = ctx.joint_decrypt(pv[label]);
    if (!value || (*value != 0 && *value != 1)) {
      verdict.accept = false;
      verdict.cause = "malformed flag";
      return verdict;
    }
    verdict.bits.push_back(static_cast<int>(*value));
    verdict.matched += *value;
  }
  verdict.accept = verdict.matched >= r0;
  if (!verdict.accept) verdict.cause = "matched count below r0";
  return verdict;
}

}  // namespace dataring
