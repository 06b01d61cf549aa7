#pragma once
// Experiment drivers: each one turns a flat parameter set into a CSV report,
// deterministically in the master seed, and round-trips through a run
// manifest for replay.
//
//   pv-threshold : partial-view accept rates vs kept true records (Eq. 1/2)
//   lmin         : minimum background-knowledge size over a grid of N
//   nmin-table   : v_opt / n_min over a theta grid
//   detection    : cheating-detection curves (forced-x / honest FP)
//   eq6-check    : Monte-Carlo detection vs the closed forms, with the
//                  independent-test-position gap quantified

#include <cstdint>
#include <string>
#include <vector>

#include "dataring/manifest.hpp"
#include "dataring/session.hpp"

namespace dataring {

// Protocol scale shared by the session-driving experiments.  l = 0 derives
// the background size as l_min(n, v/n, eta); battery is "default", "all-l",
// "all-v", "all-n", or an explicit "nL,nV,nN" triple.
struct ProtocolShape {
  long n = 10000;
  double a = 2.0;
  long v = 100;
  long l = 0;
  std::string eta = "0.05";
  int m_q = 10;
  int m_t = 10;
  double eps = 0.5;
  double eps_s = 0.5;
  double delta_t = 1.0;
  double tail = 0.05;
  std::string rule = "per-budget";     // or "combined"
  std::string tolerance = "strict";    // or "wide"
  long wide_trials = 1;
  std::string battery = "default";
  std::int64_t window = 1 << 20;
};

struct PvThresholdParams {
  long n = 1000;
  double a = 2.0;
  long v = 100;
  long l = 0;                  // 0 => l_min(n, v/n, eta)
  std::string eta = "0.05";
  long r0 = 0;                 // 0 => choose_r0(n, v, l, eta)
  long trials = 2000;
  std::string n_grid;          // kept-true-record grid; empty => 0,n/4,n/2,3n/4,n
  bool encrypted = false;
  std::uint64_t seed = 20260814;
  int workers = 1;             // trial shards; never affects the output bytes
};

struct LminParams {
  std::string eta = "0.05";
  std::string rho = "0.01";
  std::string n_grid = "500000,1000000,1500000,2000000";
};

struct NminTableParams {
  long n = 500000;
  long v = 5000;
  long l = 500;
  std::string eta = "0.05";
  std::string thetas = "0.91,0.93,0.95,0.96";
};

struct DetectionParams {
  ProtocolShape shape;
  std::string strategies = "modify:0.2,modify:0.5,modify:1.0,add:0.2,add:0.5,add:1.0";
  std::string x_values;        // empty => 1..m
  long trials = 30;
  bool full_protocol = false;  // drive complete sessions instead of the fast evaluator
  bool encrypted = false;      // only meaningful with full_protocol
  std::uint64_t seed = 20260814;
  int workers = 1;             // trial shards; never affects the output bytes
};

struct Eq6Params {
  ProtocolShape shape;
  std::string strategies = "modify:1.0,add:0.5";
  std::string p_c_grid = "0.2,0.5,0.8,1.0";
  long pd_trials = 3000;   // full sessions per strategy to measure p_d
  long mc_trials = 100000; // Monte-Carlo trials per model and row
  std::uint64_t seed = 20260814;
  int workers = 1;         // shards the p_d sessions; never affects the output bytes
};

std::string run_pv_threshold(const PvThresholdParams& p);
std::string run_lmin(const LminParams& p);
std::string run_nmin_table(const NminTableParams& p);
std::string run_detection(const DetectionParams& p);
std::string run_eq6(const Eq6Params& p);

// Manifest round-trip.  Each to_manifest records the experiment name under
// "experiment" plus every parameter; run_from_manifest dispatches on it.
Manifest to_manifest(const PvThresholdParams& p);
Manifest to_manifest(const LminParams& p);
Manifest to_manifest(const NminTableParams& p);
Manifest to_manifest(const DetectionParams& p);
Manifest to_manifest(const Eq6Params& p);

struct ExperimentRun {
  std::string experiment;
  std::string csv;
};
ExperimentRun run_from_manifest(const Manifest& m);

// Parsed helpers shared with the CLI.
CheatStrategy parse_strategy(const std::string& text);  // "honest" | "modify:a" | "add:w"
TestBattery parse_battery(const std::string& text, int m_t);
std::vector<long> parse_long_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

// Fixed protocol assets for the session experiments: a synthetic dataset at
// the configured scale, its background knowledge, one accepted partial view,
// and prebuilt query material.
struct ProtocolFixture {
  std::size_t domain_size = 0;
  long l = 0;   // resolved background size
  long r0 = 0;  // verification threshold used for the partial view
  HistogramDataset dataset;
  std::vector<std::size_t> background;
  QuerySessionParams params;
  SessionAssets assets;
};
ProtocolFixture build_protocol_fixture(const CipherContext& ctx, const ProtocolShape& shape,
                                       std::uint64_t seed);

// Plain-mode session evaluator that consumes exactly the same derived random
// streams as run_query_session and reproduces its detection decisions without
// materializing ciphertexts, answers, or transport messages.  One evaluation
// costs O(domain + m) instead of O(domain * m).
struct SessionDecision {
  bool cheated = false;
  bool flagged = false;
  bool released = false;
  int x_used = 0;
  int tests_cheated = 0;
  int tests_cheated_failed = 0;
  int tests_failed = 0;
};

class FastSessionEvaluator {
 public:
  FastSessionEvaluator(const CipherContext& ctx, const SessionAssets& assets,
                       const QuerySessionParams& params);

  SessionDecision run(const CheatStrategy& strategy, std::uint64_t seed);

  // Forced-x sweep sharing one seed's draws; entry i is the outcome the full
  // session would produce for forced_x = xs[i] at this seed (the placement
  // permutation does not depend on x, so the draws coincide).
  std::vector<SessionDecision> run_sweep(const CheatStrategy& strategy,
                                         const std::vector<int>& xs, std::uint64_t seed);

 private:
  struct TrialDraws;
  void draw_trial(const CheatStrategy& strategy, std::uint64_t seed, TrialDraws& out);
  SessionDecision decide(const TrialDraws& draws, const std::vector<std::uint8_t>& cheat) const;

  const SessionAssets* assets_;
  QuerySessionParams params_;
  double scale_ = 0;
  std::int64_t window_ = 0;
  std::vector<std::uint8_t> in_background_;
  std::vector<std::uint8_t> in_pv_;
  // reusable per-trial buffers
  std::vector<std::size_t> order_buf_;
  std::vector<std::size_t> filler_buf_;
};

}  // namespace dataring
