#include "dataring/query.hpp"

#include <cmath>

namespace dataring {

QueryVector encode_query(const std::vector<std::size_t>& labels, std::size_t domain_size) {
  QueryVector qv;
  qv.bits.assign(domain_size, 0);
  for (std::size_t label : labels) {
    if (label >= domain_size) throw std::invalid_argument("query label outside domain");
    qv.bits[label] = 1;
  }
  return qv;
}

EncryptedQuery encrypt_query(const CipherContext& ctx, const QueryVector& qv, Rng& nonce_rng) {
  EncryptedQuery eq;
  eq.entries.reserve(qv.bits.size());
  for (std::uint8_t bit : qv.bits) eq.entries.push_back(ctx.encrypt(bit, nonce_rng));
  return eq;
}

std::pair<EncryptedQuery, TestSpec> make_test_l(const CipherContext& ctx,
                                                const std::vector<std::size_t>& background,
                                                std::size_t domain_size, double noise_max,
                                                Rng& nonce_rng) {
  EncryptedQuery eq = encrypt_query(ctx, encode_query(background, domain_size), nonce_rng);
  eq.is_test = true;
  return {std::move(eq),
          TestSpec{TestKind::kL, static_cast<std::int64_t>(background.size()), noise_max}};
}

std::pair<EncryptedQuery, TestSpec> make_test_n(const CipherContext& ctx, std::size_t domain_size,
                                                std::int64_t claimed_n, double noise_max,
                                                Rng& nonce_rng) {
  QueryVector all_ones;
  all_ones.bits.assign(domain_size, 1);
  EncryptedQuery eq = encrypt_query(ctx, all_ones, nonce_rng);
  eq.is_test = true;
  return {std::move(eq), TestSpec{TestKind::kN, claimed_n, noise_max}};
}

std::pair<EncryptedQuery, TestSpec> make_test_v(const CipherContext& ctx,
                                                const std::vector<Slot>& pv, bool pv_verified,
                                                std::int64_t v, double noise_max, Rng& nonce_rng) {
  if (!pv_verified)
    throw std::logic_error("Test V requires a verified partial view");
  EncryptedQuery eq;
  eq.is_test = true;
  eq.entries.reserve(pv.size());
  for (const Slot& s : pv) eq.entries.push_back(ctx.rerandomize(s, nonce_rng));
  return {std::move(eq), TestSpec{TestKind::kV, v, noise_max}};
}

void rerandomize_query(const CipherContext& ctx, EncryptedQuery& eq, Rng& nonce_rng) {
  for (Slot& s : eq.entries) s = ctx.rerandomize(s, nonce_rng);
}

double PrivacyBudget::scale() const {
  validate();
  if (rule == ScaleRule::kPerBudget) return m_q * delta_t / eps;
  return (m_q + m_t) * delta_t / (eps + eps_s);
}

void PrivacyBudget::validate() const {
  if (eps <= 0 || eps_s <= 0) throw std::invalid_argument("privacy budgets must be positive");
  if (m_q < 1) throw std::invalid_argument("m_q must be at least 1");
  if (m_t < 0 || m_t > m_q)
    throw std::invalid_argument("test count must satisfy 0 <= m_t <= m_q");
  if (delta_t <= 0) throw std::invalid_argument("sensitivity must be positive");
}

Slot answer_query(const CipherContext& ctx, const std::vector<std::size_t>& set_labels,
                  const std::vector<Slot>& entries, PrivacyBudget& budget, Rng& noise_rng,
                  Rng& nonce_rng, std::optional<std::int64_t> forced_noise) {
  budget.validate();
  if (budget.exhausted()) throw BudgetExhausted();
  const std::int64_t noise =
      forced_noise ? *forced_noise : noise_rng.laplace_int(budget.scale());
  Slot ans = ctx.encrypt(noise, nonce_rng);  // ans <- 0 + noise encryption
  for (std::size_t label : set_labels) {
    if (label >= entries.size()) throw std::invalid_argument("dataset label outside query");
    ans = ctx.add(ans, entries[label]);
  }
  ++budget.consumed;
  return ans;
}

Slot answer_query(const CipherContext& ctx, const std::vector<std::size_t>& set_labels,
                  const EncryptedQuery& eq, PrivacyBudget& budget, Rng& noise_rng, Rng& nonce_rng,
                  std::optional<std::int64_t> forced_noise) {
  return answer_query(ctx, set_labels, eq.entries, budget, noise_rng, nonce_rng, forced_noise);
}

Slot answer_query(const CipherContext& ctx, const HistogramDataset& ds, const EncryptedQuery& eq,
                  PrivacyBudget& budget, Rng& noise_rng, Rng& nonce_rng,
                  std::optional<std::int64_t> forced_noise) {
  if (ds.domain_size() != eq.entries.size())
    throw std::invalid_argument("query length does not match domain");
  return answer_query(ctx, ds.set_labels(), eq, budget, noise_rng, nonce_rng, forced_noise);
}

double noise_max(int m_q, double delta_t, double eps, double tail) {
  if (tail <= 0 || tail > 1) throw std::invalid_argument("tail must be in (0, 1]");
  if (m_q < 1 || delta_t <= 0 || eps <= 0) throw std::invalid_argument("bad noise_max inputs");
  return std::log(1.0 / tail) * m_q * delta_t / eps;
}

AnswerVerdict verify_answer(const CipherContext& ctx, const Slot& answer, const TestSpec& spec) {
  AnswerVerdict v;
  v.decoded = ctx.joint_decrypt(answer);
  if (!v.decoded) return v;  // decode overflow: fail
  const double delta = static_cast<double>(*v.decoded) - static_cast<double>(spec.center);
  v.pass = std::abs(delta) <= spec.noise_max;
  return v;
}

std::optional<std::vector<Slot>> release_answers(const CipherContext& ctx,
                                                 const std::vector<Slot>& real_answers,
                                                 const Point& querier_key, bool all_tests_passed,
                                                 Rng& s1_nonce, Rng& s2_nonce) {
  if (!all_tests_passed) return std::nullopt;
  std::vector<Slot> released;
  released.reserve(real_answers.size());
  for (const Slot& s : real_answers)
    released.push_back(ctx.reencrypt(s, querier_key, s1_nonce, s2_nonce));
  return released;
}

std::vector<std::uint8_t> schedule(int m_q, int m_t, std::uint64_t seed) {
  if (m_q < 1) throw std::invalid_argument("m_q must be at least 1");
  if (m_t < 0 || m_t > m_q) throw std::invalid_argument("schedule requires 0 <= m_t <= m_q");
  std::vector<std::uint8_t> slots(static_cast<std::size_t>(m_q + m_t), 0);
  for (int i = 0; i < m_t; ++i) slots[static_cast<std::size_t>(i)] = 1;
  Rng rng(seed);
  shuffle_in_place(slots, rng);
  return slots;
}

}  // namespace dataring
