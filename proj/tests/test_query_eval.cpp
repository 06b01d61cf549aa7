// Query encoding, homomorphic noisy answering, hidden tests, verification,
// release, and the privacy-budget accounting.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "dataring/query.hpp"
#include "dataring/session.hpp"

using namespace dataring;

namespace {

struct QEnv {
  EcGroup group;
  CipherContext ctx;
  Rng nonce;

  explicit QEnv(std::int64_t window = 1 << 12)
      : ctx([&] {
          Rng keygen = derive_rng(61, {stream::kKeygen});
          return CipherContext::make_encrypted(group, window, keygen);
        }()),
        nonce(derive_rng(61, {stream::kNonce})) {}
};

long intersection(const std::vector<std::size_t>& support, const QueryVector& qv) {
  long n = 0;
  for (std::size_t label : support)
    if (qv.bits[label]) ++n;
  return n;
}

}  // namespace

TEST_CASE("encode_query builds the indicator") {
  const QueryVector qv = encode_query({1, 3, 3}, 5);
  CHECK(qv.bits == std::vector<std::uint8_t>{0, 1, 0, 1, 0});
  CHECK_THROWS(encode_query({5}, 5));
}

TEST_CASE("noiseless answers equal the exact intersection, plain and encrypted") {
  QEnv env;
  const CipherContext plain = CipherContext::make_plain(1 << 12);
  Rng pick(5);
  for (int c = 0; c < 60; ++c) {
    const std::size_t domain = 24;
    std::vector<std::size_t> support, labels;
    for (std::size_t i = 0; i < domain; ++i) {
      if (pick.below(2)) support.push_back(i);
      if (pick.below(2)) labels.push_back(i);
    }
    const QueryVector qv = encode_query(labels, domain);
    PrivacyBudget b1, b2;
    Rng noise(0);  // overridden by forced_noise
    const EncryptedQuery eq_enc = encrypt_query(env.ctx, qv, env.nonce);
    const Slot enc = answer_query(env.ctx, support, eq_enc, b1, noise, env.nonce, 0);
    Rng pnonce(0);
    const EncryptedQuery eq_plain = encrypt_query(plain, qv, pnonce);
    const Slot pl = answer_query(plain, support, eq_plain, b2, noise, pnonce, 0);
    const long expected = intersection(support, qv);
    CHECK(env.ctx.joint_decrypt(enc) == expected);
    CHECK(plain.joint_decrypt(pl) == expected);
  }
}

TEST_CASE("noisy answer = intersection + Laplace draw; moments match the scale") {
  const CipherContext plain = CipherContext::make_plain(1 << 20);
  const std::size_t domain = 40;
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < domain; i += 2) support.push_back(i);
  std::vector<std::size_t> all(domain);
  for (std::size_t i = 0; i < domain; ++i) all[i] = i;
  const QueryVector qv = encode_query(all, domain);
  Rng nonce(0);
  const EncryptedQuery eq = encrypt_query(plain, qv, nonce);

  PrivacyBudget budget;
  budget.m_q = 10;
  budget.eps = 0.5;  // scale = 10*1/0.5 = 20
  REQUIRE(budget.scale() == 20.0);

  Rng noise(77);
  const int draws = 200000;
  double sum = 0.0, abs_sum = 0.0;
  for (int i = 0; i < draws; ++i) {
    PrivacyBudget fresh = budget;
    const Slot ans = answer_query(plain, support, eq, fresh, noise, nonce);
    const auto v = plain.joint_decrypt(ans);
    REQUIRE(v.has_value());
    const double e = static_cast<double>(*v) - static_cast<double>(support.size());
    sum += e;
    abs_sum += std::fabs(e);
  }
  CHECK(std::fabs(sum / draws) < 0.5);                          // E[noise] = 0
  CHECK(abs_sum / draws == doctest::Approx(20.0).epsilon(0.05));  // E|noise| = b
}

TEST_CASE("privacy budget: scale rules, validation, exhaustion") {
  PrivacyBudget b;
  b.m_q = 10;
  b.m_t = 10;
  b.eps = 0.5;
  b.eps_s = 0.5;
  b.delta_t = 1.0;
  CHECK(b.scale() == 20.0);  // per-budget: m_q * dT / eps
  b.rule = PrivacyBudget::ScaleRule::kCombined;
  CHECK(b.scale() == 20.0);  // (m_q+m_t) * dT / (eps+eps_s)
  b.m_t = 4;
  CHECK(b.scale() == 14.0);

  PrivacyBudget bad = b;
  bad.m_t = 11;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = b;
  bad.eps = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = b;
  bad.m_t = 0;
  CHECK_NOTHROW(bad.validate());  // test-free sessions are legal

  const CipherContext plain = CipherContext::make_plain(64);
  PrivacyBudget tiny;
  tiny.m_q = 1;
  tiny.m_t = 0;
  Rng noise(1), nonce(1);
  const EncryptedQuery eq = encrypt_query(plain, encode_query({0}, 4), nonce);
  CHECK(tiny.exhausted() == false);
  (void)answer_query(plain, {0, 2}, eq, tiny, noise, nonce);
  CHECK(tiny.consumed == 1);
  CHECK(tiny.exhausted());
  CHECK_THROWS_AS(answer_query(plain, {0, 2}, eq, tiny, noise, nonce), BudgetExhausted);
}

TEST_CASE("noise_max and the session tolerances") {
  // strict: scale * ln(1/tail); per-test tail mass is exactly `tail`.
  CHECK(noise_max(10, 1.0, 0.5, 0.05) == doctest::Approx(20.0 * std::log(1.0 / 0.05)));
  PrivacyBudget b;
  b.m_q = 10;
  b.m_t = 10;
  b.eps = 0.5;
  CHECK(tolerance_noise_max(b, 0.05, ToleranceMode::kStrict, 1) ==
        doctest::Approx(20.0 * std::log(20.0)));
  // wide: union bound over every test the strategy will ever face.
  CHECK(tolerance_noise_max(b, 0.05, ToleranceMode::kWide, 10) ==
        doctest::Approx(20.0 * std::log(10 * 10 / 0.05)));
  CHECK_THROWS(tolerance_noise_max(b, 0.0, ToleranceMode::kStrict, 1));
}

TEST_CASE("hidden tests carry the right centers and query contents") {
  QEnv env;
  const std::vector<std::size_t> background{2, 5, 7};
  auto [lq, lspec] = make_test_l(env.ctx, background, 10, 6.0, env.nonce);
  CHECK(lspec.kind == TestKind::kL);
  CHECK(lspec.center == 3);
  CHECK(lspec.noise_max == 6.0);
  CHECK(lq.is_test);
  REQUIRE(lq.entries.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto v = env.ctx.joint_decrypt(lq.entries[i]);
    const bool in_bg = std::count(background.begin(), background.end(), i) > 0;
    CHECK(v == (in_bg ? 1 : 0));
  }

  auto [nq, nspec] = make_test_n(env.ctx, 10, 42, 6.0, env.nonce);
  CHECK(nspec.kind == TestKind::kN);
  CHECK(nspec.center == 42);
  for (const Slot& s : nq.entries) CHECK(env.ctx.joint_decrypt(s) == 1);

  // Test V needs a verified partial view.
  std::vector<Slot> pv;
  for (int v : {1, 0, 1, 0, 0, 0, 0, 0, 0, 0}) pv.push_back(env.ctx.encrypt(v, env.nonce));
  CHECK_THROWS(make_test_v(env.ctx, pv, false, 2, 6.0, env.nonce));
  auto [vq, vspec] = make_test_v(env.ctx, pv, true, 2, 6.0, env.nonce);
  CHECK(vspec.kind == TestKind::kV);
  CHECK(vspec.center == 2);
  REQUIRE(vq.entries.size() == pv.size());
  for (std::size_t i = 0; i < pv.size(); ++i) {
    CHECK(env.ctx.joint_decrypt(vq.entries[i]) == env.ctx.joint_decrypt(pv[i]));
    // Re-randomized, never the stored view's bytes.
    CHECK(env.ctx.serialize(vq.entries[i]) != env.ctx.serialize(pv[i]));
  }

  // Re-randomizing a whole query changes every slot but no plaintext.
  EncryptedQuery again = lq;
  rerandomize_query(env.ctx, again, env.nonce);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(env.ctx.serialize(again.entries[i]) != env.ctx.serialize(lq.entries[i]));
    CHECK(env.ctx.joint_decrypt(again.entries[i]) == env.ctx.joint_decrypt(lq.entries[i]));
  }
}

TEST_CASE("verify_answer: pass band boundaries and overflow") {
  QEnv env;
  TestSpec spec{TestKind::kL, 20, 5.0};
  CHECK(verify_answer(env.ctx, env.ctx.encrypt(20, env.nonce), spec).pass);
  CHECK(verify_answer(env.ctx, env.ctx.encrypt(25, env.nonce), spec).pass);
  CHECK(verify_answer(env.ctx, env.ctx.encrypt(15, env.nonce), spec).pass);
  CHECK_FALSE(verify_answer(env.ctx, env.ctx.encrypt(26, env.nonce), spec).pass);
  CHECK_FALSE(verify_answer(env.ctx, env.ctx.encrypt(14, env.nonce), spec).pass);

  // Decode overflow (answer far outside the window) fails with empty decode.
  QEnv small(16);
  Rng n2(3);
  const AnswerVerdict v =
      verify_answer(small.ctx, small.ctx.encrypt(17, n2), TestSpec{TestKind::kN, 0, 100.0});
  CHECK_FALSE(v.pass);
  CHECK_FALSE(v.decoded.has_value());
}

TEST_CASE("release: all-pass re-encrypts to the querier, any-fail discards") {
  QEnv env;
  Rng qk = derive_rng(9, {stream::kKeygen});
  const KeyPair querier = env.ctx.make_recipient_key(qk);
  Rng s1 = derive_rng(9, {stream::kNonce, 3});
  Rng s2 = derive_rng(9, {stream::kNonce, 4});
  std::vector<Slot> answers{env.ctx.encrypt(5, env.nonce), env.ctx.encrypt(-3, env.nonce)};

  const auto released = release_answers(env.ctx, answers, querier.pub, true, s1, s2);
  REQUIRE(released.has_value());
  REQUIRE(released->size() == 2);
  CHECK(env.ctx.recipient_decrypt(querier, (*released)[0]) == 5);
  CHECK(env.ctx.recipient_decrypt(querier, (*released)[1]) == -3);
  // The servers' collective key must no longer decode the released slots.
  for (const Slot& s : *released) {
    const auto leak = env.ctx.joint_decrypt(s);
    if (leak) CHECK(*leak != 5);
  }

  CHECK_FALSE(release_answers(env.ctx, answers, querier.pub, false, s1, s2).has_value());
}

TEST_CASE("schedule: composition, determinism, and variability") {
  CHECK_THROWS(schedule(0, 0, 1));
  CHECK_THROWS(schedule(5, 6, 1));
  std::set<std::vector<std::uint8_t>> distinct;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = schedule(10, 10, seed);
    REQUIRE(s.size() == 20);
    CHECK(std::count(s.begin(), s.end(), 1) == 10);
    CHECK(schedule(10, 10, seed) == s);
    distinct.insert(s);
  }
  CHECK(distinct.size() > 40);  // schedules genuinely vary with the seed
}
