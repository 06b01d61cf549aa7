#pragma once
// Deterministic multi-party runtime: one partial-view session and one
// query-evaluation session, wired over the in-process transport, with
// cheating-strategy adversaries.  All randomness is derived from the session
// seed through fixed stream tags, so a session replays bit-for-bit and the
// plain/encrypted backends agree verdict-for-verdict.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dataring/backend.hpp"
#include "dataring/dataset.hpp"
#include "dataring/partial_view.hpp"
#include "dataring/query.hpp"
#include "dataring/transport.hpp"

namespace dataring {

struct CheatStrategy {
  enum class Kind { kHonest, kModify, kAdd };
  Kind kind = Kind::kHonest;
  double rate = 0.0;              // modifying rate alpha / adding rate omega
  double p_c = 0.0;               // per-query cheat probability (iid mode)
  std::optional<int> forced_x;    // exactly x incorrect answers (curve mode)
};

// How many of the m_t hidden tests are of each kind.  The default puts half
// on Test N and splits the rest between L and V.
struct TestBattery {
  int n_l = 0;
  int n_v = 0;
  int n_n = 0;
  int total() const { return n_l + n_v + n_n; }
  static TestBattery default_for(int m_t);
  static TestBattery all_l(int m_t) { return TestBattery{m_t, 0, 0}; }
  // Canonical test order: the k-th test drawn in the stream is kinds()[k].
  std::vector<TestKind> kinds() const;
};

enum class ToleranceMode {
  kStrict,  // Pr(|noise| > noise_max) = tail per test
  kWide,    // union bound over m_t tests and `wide_trials` sessions
};

// Acceptance half-width for test answers under the chosen mode.
double tolerance_noise_max(const PrivacyBudget& budget, double tail, ToleranceMode mode,
                           long wide_trials);

struct QuerySessionParams {
  PrivacyBudget budget;             // m_q, m_t, eps, eps_s, scale rule
  double tail = 0.05;
  ToleranceMode tolerance = ToleranceMode::kStrict;
  long wide_trials = 1;
  TestBattery battery;              // battery.total() must equal budget.m_t
  long v = 0;                       // Test V center
};

// Prebuilt per-participant material reused across sessions: the querier's
// real queries and the server's test queries.  Reusing a test re-randomizes
// its entries per session (a no-op in plain mode, where ciphertext freshness
// is not modeled).
struct SessionAssets {
  std::size_t domain_size = 0;
  std::vector<std::size_t> true_support;           // the participant's real labels
  std::vector<std::size_t> complement;             // non-dataset labels
  std::vector<SlotVec> real_queries;               // m_q encrypted count queries
  std::vector<SlotVec> test_queries;               // battery order
  std::vector<TestSpec> test_specs;                // battery order
  SlotVec pv;                                      // verified partial view (for Test V)
};

SessionAssets build_session_assets(const CipherContext& ctx, const HistogramDataset& ds,
                                   const std::vector<std::size_t>& background, SlotVec pv,
                                   const QuerySessionParams& params, std::uint64_t seed);

struct PvSessionResult {
  PvVerdict verdict;
  SlotVec pv;  // empty when the protocol aborted
};

// Four-step PV collection for a participant that keeps n_true real records
// and fills the rest with non-dataset labels (n_true = N is honest), then
// server-side verification against the background knowledge.
PvSessionResult run_pv_session(const CipherContext& ctx, Transport& transport,
                               const HistogramDataset& true_ds, long n_true, long v,
                               const std::vector<std::size_t>& background, long r0,
                               std::uint64_t seed);

struct QuerySessionResult {
  bool cheated = false;    // at least one answer used the fake dataset
  bool flagged = false;    // at least one test failed
  bool released = false;
  int x_used = 0;          // answers that used the fake dataset
  int tests_cheated = 0;   // test answers among them
  int tests_cheated_failed = 0;  // cheated test answers that failed verification
  int tests_failed = 0;          // all failed tests (includes honest false positives)
  int answers_given = 0;
  std::vector<std::optional<std::int64_t>> querier_values;  // decrypted released answers
  std::vector<std::optional<std::int64_t>> test_decoded;    // schedule order
};

// One full query-evaluation session: schedule m_q+m_t queries, stream them to
// the target (which applies its cheat strategy per query), verify the test
// answers only after all are in, then release or discard.
QuerySessionResult run_query_session(const CipherContext& ctx, Transport& transport,
                                     const SessionAssets& assets,
                                     const QuerySessionParams& params,
                                     const CheatStrategy& strategy, std::uint64_t seed);

// The fake dataset D* for a strategy: Modify replaces floor(rate*N) true
// labels with non-dataset labels (size stays N); Add appends floor(rate*N)
// non-dataset labels.  Removal and addition orders are prefix-nested in the
// rate because they come from full shuffles.  Shared by the session and the
// accelerated experiment evaluator so both consume identical draws.
std::vector<std::size_t> build_cheat_support(const CheatStrategy& strategy,
                                             const std::vector<std::size_t>& true_support,
                                             const std::vector<std::size_t>& complement,
                                             Rng& dataset_rng, Rng& filler_rng,
                                             std::vector<std::size_t>* removed_out = nullptr,
                                             std::vector<std::size_t>* added_out = nullptr);

struct DetectionOutcome {
  long trials = 0;
  long tp = 0, fn = 0, tn = 0, fp = 0;
  long pd_events = 0;      // cheated test answers
  long pd_violations = 0;  // ... that failed verification
  void add(const QuerySessionResult& r);
  double accuracy() const;  // TP / (TP + FN)
  double p_d_hat() const;   // pd_violations / pd_events
};

}  // namespace dataring
