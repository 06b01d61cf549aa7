// Release gate: nine acceptance checks, one summary line each.  Every
// threshold and tolerance is pinned here in code.  Checks 1 and 2 compare
// exact arbitrary-precision results against pinned reference targets; where
// the exact arithmetic lands elsewhere the check prints the measured values
// and fails rather than bending the computation toward the target.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <openssl/bn.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dataring/backend.hpp"
#include "dataring/dataset.hpp"
#include "dataring/elgamal.hpp"
#include "dataring/experiments.hpp"
#include "dataring/query.hpp"
#include "dataring/session.hpp"
#include "dataring/stats.hpp"
#include "dataring/transport.hpp"
#include "support/chi_square.hpp"

using namespace dataring;

namespace {

constexpr std::uint64_t kSeed = 20260814;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void line(int id, const std::string& label, bool pass, const Timer& t) {
  std::printf("[criterion %d] %s: %s (%.1fs)\n", id, label.c_str(), pass ? "PASS" : "FAIL",
              t.seconds());
  std::fflush(stdout);
}

std::vector<std::string> csv_rows(const std::string& csv) {
  std::vector<std::string> rows;
  std::istringstream in(csv);
  std::string row;
  while (std::getline(in, row))
    if (!row.empty()) rows.push_back(row);
  return rows;
}

std::vector<std::string> fields(const std::string& row) {
  std::vector<std::string> out;
  std::istringstream in(row);
  std::string f;
  while (std::getline(in, f, ',')) out.push_back(f);
  return out;
}

// Uniform k-subset of [0, d) without replacement.
std::vector<std::size_t> sample_subset(Rng& rng, std::size_t d, std::size_t k) {
  std::vector<std::size_t> pool(d);
  for (std::size_t i = 0; i < d; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i)
    std::swap(pool[i], pool[i + static_cast<std::size_t>(rng.below(d - i))]);
  pool.resize(k);
  return pool;
}

Bn mod_add(const EcGroup& group, const Bn& a, const Bn& b) {
  Bn out;
  BN_CTX* ctx = BN_CTX_new();
  REQUIRE(ctx != nullptr);
  REQUIRE(BN_mod_add(out.get(), a.get(), b.get(), group.order().get(), ctx) == 1);
  BN_CTX_free(ctx);
  return out;
}

// CSV rows of run_detection for one strategy text, keyed by x.
struct DetRow {
  long x = 0;
  double accuracy = 0.0;
};
std::vector<DetRow> detection_rows(const std::string& csv, const std::string& strategy,
                                   const std::string& rate) {
  std::vector<DetRow> out;
  for (const std::string& row : csv_rows(csv)) {
    const std::vector<std::string> f = fields(row);
    if (f.size() < 9 || f[0] != strategy || f[1] != rate) continue;
    out.push_back(DetRow{std::stol(f[2]), std::stod(f[8])});
  }
  return out;
}

double mean_accuracy(const std::vector<DetRow>& rows) {
  double acc = 0.0;
  for (const DetRow& r : rows) acc += r.accuracy;
  return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
}

}  // namespace

TEST_CASE("criterion 1: dataset-size lower bounds at evaluation scale") {
  Timer t;
  NminTableParams p;  // N=500000, V=5000, L=500, eta=0.05, theta grid 0.91..0.96
  const std::string csv = run_nmin_table(p);
  const std::vector<std::string> rows = csv_rows(csv);
  REQUIRE(rows.size() == 5);

  const long targets[4] = {410730, 443155, 485786, 500000};
  const long allowed = 250;  // 0.05% of N
  bool pass = true;
  std::string detail;
  for (int i = 0; i < 4; ++i) {
    const std::vector<std::string> f = fields(rows[static_cast<std::size_t>(i) + 1]);
    REQUIRE(f.size() >= 4);
    const long got = std::stol(f[3]);
    const long diff = std::labs(got - targets[i]);
    const bool row_ok = diff <= allowed;
    pass = pass && row_ok;
    detail += "    theta=" + f[0] + "  r0=" + f[1] + "  v_opt=" + f[2] +
              "  n_min=" + std::to_string(got) + "  target=" + std::to_string(targets[i]) +
              "  diff=" + std::to_string(diff) + " (allowed " + std::to_string(allowed) + ")\n";
    CHECK_MESSAGE(row_ok, "theta=", f[0], ": exact n_min=", got, " vs target ", targets[i],
                  ", diff ", diff, " exceeds ", allowed);
  }
  line(1, "dataset-size lower bounds at evaluation scale", pass, t);
  std::cout << detail;
}

TEST_CASE("criterion 2: minimum background size across the N grid") {
  Timer t;
  LminParams p;  // eta=0.05, rho=0.01, N in {500000, 1M, 1.5M, 2M}
  const std::string csv = run_lmin(p);
  const std::vector<std::string> rows = csv_rows(csv);
  REQUIRE(rows.size() == 5);

  bool pass = true;
  std::string detail;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::vector<std::string> f = fields(rows[i]);
    REQUIRE(f.size() == 3);
    const long got = std::stol(f[2]);
    const bool row_ok = got == 299;
    pass = pass && row_ok;
    detail += "    n=" + f[0] + "  v=" + f[1] + "  l_min=" + std::to_string(got) +
              "  target=299\n";
    CHECK_MESSAGE(row_ok, "n=", f[0], ": exact l_min=", got, " != 299");
  }
  line(2, "minimum background size across the N grid", pass, t);
  std::cout << detail;
}

TEST_CASE("criterion 3: group-layer property suite, 1000 cases per property") {
  Timer t;
  const long kCases = 1000;
  const std::int64_t kW = 1 << 16;
  EcGroup group;
  Rng rng = derive_rng(kSeed, {3});
  const KeyPair k1 = keygen(group, rng);
  const KeyPair k2 = keygen(group, rng);
  const KeyPair kq = keygen(group, rng);
  const Point coll = collective_key(group, {k1.pub, k2.pub});
  const Bn combined = mod_add(group, k1.secret, k2.secret);
  const DecodeWindow win(group, kW);

  auto draw = [&](std::int64_t w) {
    return static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(2 * w + 1))) - w;
  };

  long fails[7] = {0, 0, 0, 0, 0, 0, 0};
  for (long i = 0; i < kCases; ++i) {
    // round-trip
    {
      const std::int64_t x = draw(kW);
      const bool ok = decrypt(group, k1.secret, win, encrypt(group, k1.pub, x, rng)) == x;
      fails[0] += !ok;
      CHECK(ok);
    }
    // additive homomorphism
    {
      const std::int64_t x = draw(kW / 2);
      const std::int64_t y = draw(kW / 2);
      const Ciphertext sum =
          add(group, encrypt(group, k1.pub, x, rng), encrypt(group, k1.pub, y, rng));
      const bool ok = decrypt(group, k1.secret, win, sum) == x + y;
      fails[1] += !ok;
      CHECK(ok);
    }
    // scalar multiplication (signed scalars)
    {
      const std::int64_t x = draw(1024);
      const std::int64_t alpha = draw(63);
      const Ciphertext scaled = scalar_mul(group, encrypt(group, k1.pub, x, rng),
                                           group.scalar_from_signed(alpha));
      const bool ok = decrypt(group, k1.secret, win, scaled) == alpha * x;
      fails[2] += !ok;
      CHECK(ok);
    }
    // re-randomization preserves the plaintext and changes the bytes
    {
      const std::int64_t x = draw(kW);
      const Ciphertext ct = encrypt(group, k1.pub, x, rng);
      const Ciphertext rr = rerandomize(group, k1.pub, ct, rng);
      const bool ok = decrypt(group, k1.secret, win, rr) == x &&
                      ciphertext_to_bytes(group, rr) != ciphertext_to_bytes(group, ct);
      fails[3] += !ok;
      CHECK(ok);
    }
    // staged threshold decryption == decryption with the combined secret
    {
      const std::int64_t x = draw(kW);
      const Ciphertext ct = encrypt(group, coll, x, rng);
      const Ciphertext first = apply_decrypt_stage(group, i % 2 ? k2.secret : k1.secret, ct);
      const Ciphertext second = apply_decrypt_stage(group, i % 2 ? k1.secret : k2.secret, first);
      const std::optional<std::int64_t> staged = finish_decrypt(group, win, second);
      const bool ok = staged && *staged == x && decrypt(group, combined, win, ct) == x;
      fails[4] += !ok;
      CHECK(ok);
    }
    // staged re-encryption to the querier key round-trips
    {
      const std::int64_t x = draw(kW);
      const Ciphertext ct = encrypt(group, coll, x, rng);
      ReencryptionState st = begin_reencrypt(ct, group);
      reencrypt_stage(group, k1.secret, kq.pub, st, rng);
      reencrypt_stage(group, k2.secret, kq.pub, st, rng);
      const Ciphertext out = finish_reencrypt(std::move(st));
      const bool ok = decrypt(group, kq.secret, win, out) == x;
      fails[5] += !ok;
      CHECK(ok);
    }
    // serialization: exactly 66 bytes, lossless
    {
      static_assert(kCiphertextBytes == 66);
      const std::int64_t x = draw(kW);
      const Ciphertext ct = encrypt(group, coll, x, rng);
      const CiphertextBytes bytes = ciphertext_to_bytes(group, ct);
      const bool ok = bytes.size() == 66 &&
                      ciphertext_to_bytes(group, ciphertext_from_bytes(group, bytes)) == bytes;
      fails[6] += !ok;
      CHECK(ok);
    }
  }

  bool pass = true;
  for (long f : fails) pass = pass && f == 0;
  line(3, "group-layer property suite, 1000 cases per property", pass, t);
  std::printf(
      "    failures: round-trip=%ld homomorphism=%ld scalar=%ld rerandomize=%ld "
      "threshold-vs-combined=%ld reencrypt=%ld serialize=%ld (ciphertext bytes: %zu)\n",
      fails[0], fails[1], fails[2], fails[3], fails[4], fails[5], fails[6], kCiphertextBytes);
}

TEST_CASE("criterion 4: partial-view matched counts follow the hypergeometric law") {
  Timer t;
  const long kN = 200, kV = 40, kL = 20;
  const long kSessions = 10000;
  const stats::Rat eta = stats::rat_from_decimal("0.05");

  const CipherContext ctx = CipherContext::make_plain(64);
  const HistogramDataset ds = synth_dataset(kN, 400, derive_seed(kSeed, {4, 1}));
  const std::vector<std::size_t> background =
      sample_background(ds, kL, derive_seed(kSeed, {4, 2})).labels;
  const long r0 = stats::choose_r0(kN, kV, kL, eta);
  CHECK(r0 == 1);
  const double exact_accept = stats::hyper_tail(kN, kV, kL, r0).get_d();
  CHECK(exact_accept >= 0.95);  // threshold construction keeps false rejection under eta

  std::vector<double> observed(static_cast<std::size_t>(kL) + 1, 0.0);
  long accepted = 0;
  for (long s = 0; s < kSessions; ++s) {
    Transport tr;
    const PvSessionResult res = run_pv_session(ctx, tr, ds, kN, kV, background, r0,
                                               derive_seed(kSeed, {4, 3, static_cast<std::uint64_t>(s)}));
    REQUIRE(res.verdict.matched >= 0);
    REQUIRE(res.verdict.matched <= kL);
    observed[static_cast<std::size_t>(res.verdict.matched)] += 1.0;
    accepted += res.verdict.accept ? 1 : 0;
  }

  std::vector<double> expected(static_cast<std::size_t>(kL) + 1, 0.0);
  for (long k = 0; k <= kL; ++k)
    expected[static_cast<std::size_t>(k)] =
        static_cast<double>(kSessions) * stats::hyper_pmf(kN, kV, kL, k).get_d();
  const testsupport::GofResult gof = testsupport::chi2_gof(observed, expected, 5.0);
  const bool fit_ok = gof.p_value > 0.01;
  CHECK_MESSAGE(fit_ok, "chi-square p=", gof.p_value, " stat=", gof.stat, " df=", gof.df);

  const double rate = static_cast<double>(accepted) / static_cast<double>(kSessions);
  const double sigma =
      std::sqrt(exact_accept * (1.0 - exact_accept) / static_cast<double>(kSessions));
  const bool rate_ok = rate >= 0.95 - 3.0 * sigma;
  CHECK_MESSAGE(rate_ok, "accept rate ", rate, " below 1-eta-3sigma with sigma=", sigma);

  line(4, "partial-view matched counts follow the hypergeometric law", fit_ok && rate_ok, t);
  std::printf("    chi2 stat=%.2f df=%.0f p=%.4f bins=%zu; accept rate=%.4f exact=%.4f\n",
              gof.stat, gof.df, gof.p_value, gof.bins_used, rate, exact_accept);
}

TEST_CASE("criterion 5: noiseless homomorphic answers equal brute-force overlaps") {
  Timer t;
  EcGroup group;
  Rng keygen_rng = derive_rng(kSeed, {5, 1});
  const CipherContext ctx = CipherContext::make_encrypted(group, 128, keygen_rng);
  Rng rng = derive_rng(kSeed, {5, 2});
  Rng noise_rng = derive_rng(kSeed, {5, 3});
  Rng nonce_rng = derive_rng(kSeed, {5, 4});

  long cases = 0;
  long failures = 0;
  for (std::size_t d = 1; d <= 64; ++d) {
    for (int rep = 0; rep < 157; ++rep) {
      const std::vector<std::size_t> dataset =
          sample_subset(rng, d, static_cast<std::size_t>(rng.below(d + 1)));
      const std::vector<std::size_t> query =
          sample_subset(rng, d, static_cast<std::size_t>(rng.below(d + 1)));

      long overlap = 0;
      std::vector<std::uint8_t> in_query(d, 0);
      for (std::size_t l : query) in_query[l] = 1;
      for (std::size_t l : dataset) overlap += in_query[l];

      const EncryptedQuery eq = encrypt_query(ctx, encode_query(query, d), nonce_rng);
      PrivacyBudget budget;
      budget.m_q = 1;
      budget.m_t = 0;
      const Slot answer = answer_query(ctx, dataset, eq, budget, noise_rng, nonce_rng, 0);
      const std::optional<std::int64_t> got = ctx.joint_decrypt(answer);

      ++cases;
      const bool ok = got && *got == overlap;
      failures += !ok;
      CHECK_MESSAGE(ok, "domain=", d, " |Q|=", query.size(), " |D|=", dataset.size(),
                    " expected ", overlap);
    }
  }

  line(5, "noiseless homomorphic answers equal brute-force overlaps", failures == 0, t);
  std::printf("    cases=%ld failures=%ld (encrypted backend, forced zero noise)\n", cases,
              failures);
}

TEST_CASE("criterion 6: detection frequency matches the closed form at 100k trials") {
  Timer t;
  Eq6Params p;
  p.shape.n = 2000;
  p.shape.v = 50;
  p.shape.l = 0;  // resolved to the minimum viable background size
  p.pd_trials = 3000;
  p.mc_trials = 100000;
  p.seed = kSeed;
  const std::string csv = run_eq6(p);
  const std::vector<std::string> rows = csv_rows(csv);
  REQUIRE(rows.size() >= 2);

  bool pass = true;
  double max_z6 = 0.0, max_gap = 0.0, max_zp = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::vector<std::string> f = fields(rows[i]);
    REQUIRE(f.size() == 16);
    const double z6 = std::stod(f[10]);
    const double zp = std::stod(f[13]);
    const double gap = std::stod(f[15]);
    max_z6 = std::max(max_z6, std::fabs(z6));
    max_zp = std::max(max_zp, std::fabs(zp));
    max_gap = std::max(max_gap, std::fabs(gap));
    const bool row_ok = std::fabs(z6) <= 3.0;
    pass = pass && row_ok;
    CHECK_MESSAGE(row_ok, "strategy=", f[0], ":", f[1], " p_c=", f[2], " mc=", f[8],
                  " closed=", f[9], " z=", z6);
  }
  line(6, "detection frequency matches the closed form at 100k trials", pass, t);
  std::printf(
      "    rows=%zu max|z|=%.2f; independent-position model vs deployed schedule: "
      "max|gap|=%.4f max|z|=%.2f\n",
      rows.size() - 1, max_z6, max_gap, max_zp);
}

TEST_CASE("criterion 7: detection-accuracy curve shapes at desk scale") {
  Timer t;
  ProtocolShape shape;  // N=10^4, V=100, L -> minimum viable, m_q=m_t=10, eps=eps_S=0.5
  shape.l = 0;
  shape.tolerance = "wide";
  shape.wide_trials = 10;
  shape.battery = "all-l";

  // (a)+(b): forced incorrect-answer counts; full modification must saturate
  // past x = m_q+1 and a single incorrect answer must land near p_t = 1/2.
  DetectionParams pa;
  pa.shape = shape;
  pa.strategies = "honest,modify:1.0,modify:0.05";
  pa.x_values = "1,12,13,14,15,16,17,18,19,20";
  pa.trials = 3000;
  pa.seed = kSeed;
  const std::string csv_a = run_detection(pa);

  const std::vector<DetRow> full = detection_rows(csv_a, "modify", "1");
  REQUIRE(full.size() == 10);
  bool sat_ok = true;
  double acc_x1 = -1.0;
  for (const DetRow& r : full) {
    if (r.x == 1) {
      acc_x1 = r.accuracy;
      continue;
    }
    sat_ok = sat_ok && r.accuracy == 1.0;
    CHECK_MESSAGE(r.accuracy == 1.0, "modify(1.0) x=", r.x, " accuracy=", r.accuracy);
  }
  const bool single_ok = std::fabs(acc_x1 - 0.5) <= 0.05;
  CHECK_MESSAGE(single_ok, "modify(1.0) x=1 accuracy=", acc_x1, " not within 0.5 +/- 0.05");

  double honest_fp = -1.0;
  for (const std::string& row : csv_rows(csv_a)) {
    const std::vector<std::string> f = fields(row);
    if (f.size() >= 10 && f[0] == "honest") honest_fp = std::stod(f[9]);
  }
  const std::vector<DetRow> light = detection_rows(csv_a, "modify", "0.05");

  // (c) monotone accuracy in x and in the modifying rate.
  DetectionParams pc;
  pc.shape = shape;
  pc.strategies = "modify:0.05,modify:0.2,modify:0.5,modify:1.0";
  pc.x_values = "1,2,3,4,6,8,10,12,16,20";
  pc.trials = 1000;
  pc.seed = kSeed;
  const std::string csv_c = run_detection(pc);

  const double slack = 0.02;  // Monte-Carlo allowance on a qualitative shape
  bool mono_x = true;
  const std::vector<DetRow> curve = detection_rows(csv_c, "modify", "1");
  REQUIRE(curve.size() == 10);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const bool step_ok = curve[i].accuracy >= curve[i - 1].accuracy - slack;
    mono_x = mono_x && step_ok;
    CHECK_MESSAGE(step_ok, "accuracy dropped from x=", curve[i - 1].x, " (", curve[i - 1].accuracy,
                  ") to x=", curve[i].x, " (", curve[i].accuracy, ")");
  }

  const char* alpha_rates[4] = {"0.05", "0.2", "0.5", "1"};
  double alpha_mean[4];
  bool mono_alpha = true;
  for (int i = 0; i < 4; ++i) alpha_mean[i] = mean_accuracy(detection_rows(csv_c, "modify", alpha_rates[i]));
  for (int i = 1; i < 4; ++i) {
    const bool step_ok = alpha_mean[i] >= alpha_mean[i - 1] - slack;
    mono_alpha = mono_alpha && step_ok;
    CHECK_MESSAGE(step_ok, "mean accuracy dropped from alpha=", alpha_rates[i - 1], " (",
                  alpha_mean[i - 1], ") to alpha=", alpha_rates[i], " (", alpha_mean[i], ")");
  }

  // Adding fake records leaves membership tests exact, so the size test is the
  // discriminating one for the adding rate.
  DetectionParams pw;
  pw.shape = shape;
  pw.shape.battery = "all-n";
  pw.strategies = "add:0.005,add:0.01,add:0.02,add:0.05";
  pw.x_values = "2,6,10,14,18";
  pw.trials = 1000;
  pw.seed = kSeed;
  const std::string csv_w = run_detection(pw);

  const char* omega_rates[4] = {"0.005", "0.01", "0.02", "0.05"};
  double omega_mean[4];
  bool mono_omega = true;
  for (int i = 0; i < 4; ++i) omega_mean[i] = mean_accuracy(detection_rows(csv_w, "add", omega_rates[i]));
  for (int i = 1; i < 4; ++i) {
    const bool step_ok = omega_mean[i] >= omega_mean[i - 1] - slack;
    mono_omega = mono_omega && step_ok;
    CHECK_MESSAGE(step_ok, "mean accuracy dropped from omega=", omega_rates[i - 1], " (",
                  omega_mean[i - 1], ") to omega=", omega_rates[i], " (", omega_mean[i], ")");
  }

  const bool pass = sat_ok && single_ok && mono_x && mono_alpha && mono_omega;
  line(7, "detection-accuracy curve shapes at desk scale", pass, t);
  std::printf("    (a) saturation x>11 at full modification: %s; honest fp_rate=%.4f\n",
              sat_ok ? "exact 1.0 on all 9 points" : "BROKEN", honest_fp);
  std::printf(
      "        at modifying rate 0.05 the membership shift (~15) sits far inside the\n"
      "        acceptance half-width (152.0), so saturation is reachable only near rate 1;\n"
      "        measured mean accuracy at rate 0.05, x=12..20: %.4f (reported, not gated)\n",
      mean_accuracy(light));
  std::printf("    (b) single incorrect answer: accuracy=%.4f (target 0.5 +/- 0.05)\n", acc_x1);
  std::printf("    (c) monotone in x: %s; rate means", mono_x ? "yes" : "NO");
  for (int i = 0; i < 4; ++i) std::printf(" %.3f", alpha_mean[i]);
  std::printf(" (alpha), ");
  for (int i = 0; i < 4; ++i) std::printf(" %.3f", omega_mean[i]);
  std::printf(" (omega)\n");
}

TEST_CASE("criterion 8: byte counters match the message-size formulas exactly") {
  Timer t;
  EcGroup group;
  Rng keygen_rng = derive_rng(kSeed, {8, 1});
  const CipherContext ctx = CipherContext::make_encrypted(group, 1 << 12, keygen_rng);

  ProtocolShape shape;
  shape.n = 100;
  shape.v = 25;
  shape.l = 40;
  shape.m_q = 3;
  shape.m_t = 2;
  shape.battery = "1,1,0";
  shape.tolerance = "wide";
  shape.wide_trials = 5;
  shape.window = 1 << 12;
  const ProtocolFixture fx = build_protocol_fixture(ctx, shape, derive_seed(kSeed, {8, 2}));
  const std::uint64_t an = 200;  // a*N = 2 * 100

  Transport pv_tr;
  const PvSessionResult pv = run_pv_session(ctx, pv_tr, fx.dataset, shape.n, shape.v,
                                            fx.background, fx.r0, derive_seed(kSeed, {8, 3}));
  REQUIRE(pv.verdict.accept);
  const bool lbs_ok = pv_tr.bytes_by_kind(MsgKind::kLbs).payload == an * 8 &&
                      pv_tr.messages_by_kind(MsgKind::kLbs) == 1;
  const bool sigma_ok = pv_tr.bytes_by_kind(MsgKind::kSigmaInv).payload == an * 4;
  const bool enc_ok = pv_tr.bytes_by_kind(MsgKind::kEncLbs).payload == an * 70;
  CHECK(lbs_ok);
  CHECK(sigma_ok);
  CHECK(enc_ok);

  Transport q_tr;
  const QuerySessionResult qs = run_query_session(ctx, q_tr, fx.assets, fx.params,
                                                  CheatStrategy{}, derive_seed(kSeed, {8, 4}));
  REQUIRE(qs.answers_given == shape.m_q + shape.m_t);
  const std::uint64_t query_msgs = q_tr.messages_by_kind(MsgKind::kQuery);
  const std::uint64_t answer_msgs = q_tr.messages_by_kind(MsgKind::kAnswer);
  const bool query_ok = query_msgs > 0 &&
                        q_tr.bytes_by_kind(MsgKind::kQuery).payload == query_msgs * an * 66;
  const bool answer_ok = answer_msgs == static_cast<std::uint64_t>(shape.m_q + shape.m_t) &&
                         q_tr.bytes_by_kind(MsgKind::kAnswer).payload == answer_msgs * 66 &&
                         q_tr.bytes_by_kind(MsgKind::kAnswer).framing == 0;
  CHECK(query_ok);
  CHECK(answer_ok);

  const bool pass = lbs_ok && sigma_ok && enc_ok && query_ok && answer_ok;
  line(8, "byte counters match the message-size formulas exactly", pass, t);
  std::printf(
      "    lbs=%llu sigma-inv=%llu enc-lbs=%llu; %llu query msgs @ %llu bytes, %llu answers @ 66\n",
      static_cast<unsigned long long>(pv_tr.bytes_by_kind(MsgKind::kLbs).payload),
      static_cast<unsigned long long>(pv_tr.bytes_by_kind(MsgKind::kSigmaInv).payload),
      static_cast<unsigned long long>(pv_tr.bytes_by_kind(MsgKind::kEncLbs).payload),
      static_cast<unsigned long long>(query_msgs), static_cast<unsigned long long>(an * 66),
      static_cast<unsigned long long>(answer_msgs));
}

TEST_CASE("criterion 9: every experiment replays byte-identically from its manifest") {
  Timer t;
  bool pass = true;

  auto replay_equal = [&](const Manifest& m, const std::string& direct) {
    std::ostringstream saved;
    m.save(saved);
    std::istringstream in1(saved.str());
    const ExperimentRun r1 = run_from_manifest(Manifest::load(in1));
    std::istringstream in2(saved.str());
    const ExperimentRun r2 = run_from_manifest(Manifest::load(in2));
    const bool ok = r1.csv == direct && r2.csv == direct && !direct.empty();
    pass = pass && ok;
    CHECK_MESSAGE(ok, r1.experiment, ": replayed CSV diverged from the direct run");
    return ok;
  };

  PvThresholdParams pv;
  pv.n = 150;
  pv.v = 30;
  pv.l = 0;
  pv.trials = 40;
  pv.seed = kSeed;
  pv.workers = 2;
  replay_equal(to_manifest(pv), run_pv_threshold(pv));

  LminParams lm;
  lm.n_grid = "10000,20000";
  replay_equal(to_manifest(lm), run_lmin(lm));

  NminTableParams nm;
  nm.n = 10000;
  nm.v = 100;
  nm.l = 294;
  nm.thetas = "0.91,0.95";
  replay_equal(to_manifest(nm), run_nmin_table(nm));

  DetectionParams det;
  det.shape.n = 400;
  det.shape.v = 60;
  det.shape.l = 0;
  det.shape.m_q = 3;
  det.shape.m_t = 2;
  det.shape.battery = "1,1,0";
  det.shape.tolerance = "wide";
  det.shape.wide_trials = 5;
  det.strategies = "honest,modify:1.0";
  det.x_values = "1,2";
  det.trials = 25;
  det.seed = kSeed;
  det.workers = 3;
  replay_equal(to_manifest(det), run_detection(det));

  Eq6Params eq;
  eq.shape.n = 500;
  eq.shape.v = 40;
  eq.shape.l = 0;
  eq.shape.m_q = 4;
  eq.shape.m_t = 4;
  eq.strategies = "modify:1.0";
  eq.p_c_grid = "0.5,1.0";
  eq.pd_trials = 80;
  eq.mc_trials = 5000;
  eq.seed = kSeed;
  eq.workers = 2;
  replay_equal(to_manifest(eq), run_eq6(eq));

  line(9, "every experiment replays byte-identically from its manifest", pass, t);
}
