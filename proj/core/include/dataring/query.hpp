#pragma once
// Count-query encoding, encrypted queries, the three hidden tests (L, V, N),
// homomorphic noisy answering under a privacy budget, test verification, and
// answer release by staged re-encryption.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dataring/backend.hpp"
#include "dataring/dataset.hpp"

namespace dataring {

struct QueryVector {
  std::vector<std::uint8_t> bits;  // indicator over the domain
};

// Indicator with a 1 at each listed label.
QueryVector encode_query(const std::vector<std::size_t>& labels, std::size_t domain_size);

enum class TestKind { kL, kV, kN };

struct TestSpec {
  TestKind kind;
  std::int64_t center;  // L, V, or N
  double noise_max;     // acceptance half-width
};

struct EncryptedQuery {
  std::vector<Slot> entries;
  bool is_test = false;  // origin tag; stripped before the wire
};

EncryptedQuery encrypt_query(const CipherContext& ctx, const QueryVector& qv, Rng& nonce_rng);

// Test L: the background-knowledge indicator, expected answer L.
std::pair<EncryptedQuery, TestSpec> make_test_l(const CipherContext& ctx,
                                                const std::vector<std::size_t>& background,
                                                std::size_t domain_size, double noise_max,
                                                Rng& nonce_rng);
// Test N: all-ones, expected answer = claimed dataset size.
std::pair<EncryptedQuery, TestSpec> make_test_n(const CipherContext& ctx, std::size_t domain_size,
                                                std::int64_t claimed_n, double noise_max,
                                                Rng& nonce_rng);
// Test V: re-randomization of a *verified* partial view, expected answer V.
std::pair<EncryptedQuery, TestSpec> make_test_v(const CipherContext& ctx,
                                                const std::vector<Slot>& pv, bool pv_verified,
                                                std::int64_t v, double noise_max, Rng& nonce_rng);
// Reusing any test re-randomizes all entries again.
void rerandomize_query(const CipherContext& ctx, EncryptedQuery& eq, Rng& nonce_rng);

struct PrivacyBudget {
  enum class ScaleRule {
    kPerBudget,  // scale = m_q * dT / eps      (applied per budget)
    kCombined,   // scale = (m_q+m_t) * dT / (eps + eps_s)
  };
  double eps = 0.5;    // per peer participant
  double eps_s = 0.5;  // for the server
  int m_q = 10;
  int m_t = 10;  // must stay <= m_q
  double delta_t = 1.0;
  ScaleRule rule = ScaleRule::kPerBudget;
  int consumed = 0;

  int total() const { return m_q + m_t; }
  double scale() const;
  bool exhausted() const { return consumed >= total(); }
  void validate() const;
};

class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("privacy budget exhausted; answer withheld") {}
};

// ans <- 0, then the homomorphic sum of q_i over the set labels, plus an
// encryption of an integer-rounded Laplace draw; consumes one budget unit.
// `forced_noise` is a test hook.
Slot answer_query(const CipherContext& ctx, const std::vector<std::size_t>& set_labels,
                  const std::vector<Slot>& entries, PrivacyBudget& budget, Rng& noise_rng,
                  Rng& nonce_rng, std::optional<std::int64_t> forced_noise = std::nullopt);
Slot answer_query(const CipherContext& ctx, const std::vector<std::size_t>& set_labels,
                  const EncryptedQuery& eq, PrivacyBudget& budget, Rng& noise_rng, Rng& nonce_rng,
                  std::optional<std::int64_t> forced_noise = std::nullopt);
Slot answer_query(const CipherContext& ctx, const HistogramDataset& ds, const EncryptedQuery& eq,
                  PrivacyBudget& budget, Rng& noise_rng, Rng& nonce_rng,
                  std::optional<std::int64_t> forced_noise = std::nullopt);

// ln(1/tail) * m_q * dT / eps.
double noise_max(int m_q, double delta_t, double eps, double tail);

struct AnswerVerdict {
  bool pass = false;
  std::optional<std::int64_t> decoded;  // empty on decode overflow (fail)
};

// Threshold-decrypts a test answer; pass iff within [center +- noise_max].
AnswerVerdict verify_answer(const CipherContext& ctx, const Slot& answer, const TestSpec& spec);

// All tests passed: re-encrypt every real answer to the querier's key without
// decrypting.  Any failure: discard everything (empty result).
std::optional<std::vector<Slot>> release_answers(const CipherContext& ctx,
                                                 const std::vector<Slot>& real_answers,
                                                 const Point& querier_key, bool all_tests_passed,
                                                 Rng& s1_nonce, Rng& s2_nonce);

// Uniform interleaving of m_q real and m_t test positions (m_t <= m_q).
// true = test.
std::vector<std::uint8_t> schedule(int m_q, int m_t, std::uint64_t seed);

}  // namespace dataring
