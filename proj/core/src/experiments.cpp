#include "dataring/experiments.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

#include "dataring/stats.hpp"

namespace dataring {

namespace {

// Fixture/driver seed-derivation tags, disjoint from the session stream tags.
namespace tag {
constexpr std::uint64_t kFixtureDataset = 0x6664617401;     // "fdat"
constexpr std::uint64_t kFixtureBackground = 0x66626b6701;  // "fbkg"
constexpr std::uint64_t kFixturePv = 0x6670760001;          // "fpv"
constexpr std::uint64_t kFixtureAssets = 0x6661737301;      // "fass"
constexpr std::uint64_t kTrial = 0x747269616c01;            // "trial"
constexpr std::uint64_t kPvTrial = 0x7076747201;            // "pvtr"
constexpr std::uint64_t kPdMeasure = 0x70646d6501;          // "pdme"
constexpr std::uint64_t kMcEq6 = 0x6d63360001;              // "mc6"
constexpr std::uint64_t kMcProtocol = 0x6d63700001;         // "mcp"
}  // namespace tag

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double parse_double(const std::string& text, const char* what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (errno != 0 || end == text.c_str() || *end != '\0')
    throw std::invalid_argument(std::string(what) + " is not a number: " + text);
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      item.push_back(c);
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

PrivacyBudget::ScaleRule parse_rule(const std::string& text) {
  if (text == "per-budget") return PrivacyBudget::ScaleRule::kPerBudget;
  if (text == "combined") return PrivacyBudget::ScaleRule::kCombined;
  throw std::invalid_argument("unknown noise-scale rule: " + text);
}

ToleranceMode parse_tolerance(const std::string& text) {
  if (text == "strict") return ToleranceMode::kStrict;
  if (text == "wide") return ToleranceMode::kWide;
  throw std::invalid_argument("unknown tolerance mode: " + text);
}

// Accept probability of the partial-view check for a participant that keeps
// n_true real records out of N and fills the rest: the kept/background
// overlap is hypergeometric, and conditionally the sampled matches again.
stats::Rat theory_accept(long n, long v, long l, long r0, long n_true) {
  if (r0 <= 0) return stats::Rat(1);
  stats::Rat acc(0);
  const long hi = std::min(l, n_true);
  for (long o = r0; o <= hi; ++o)
    acc += stats::hyper_pmf(n, n_true, l, o) * stats::hyper_tail(n, o, v, r0);
  return acc;
}

long resolve_l(long n, long v, long l, const stats::Rat& eta) {
  if (l > 0) return l;
  return stats::l_min(n, static_cast<double>(v) / static_cast<double>(n), eta);
}

void add_decision(DetectionOutcome& out, const SessionDecision& d) {
  ++out.trials;
  if (d.cheated)
    d.flagged ? ++out.tp : ++out.fn;
  else
    d.flagged ? ++out.fp : ++out.tn;
  out.pd_events += d.tests_cheated;
  out.pd_violations += d.tests_cheated_failed;
}

SessionDecision decision_of(const QuerySessionResult& r) {
  SessionDecision d;
  d.cheated = r.cheated;
  d.flagged = r.flagged;
  d.released = r.released;
  d.x_used = r.x_used;
  d.tests_cheated = r.tests_cheated;
  d.tests_cheated_failed = r.tests_cheated_failed;
  d.tests_failed = r.tests_failed;
  return d;
}

// Runs fn(worker, t) for every trial t, strided across `workers` threads.
// Per-trial seeds make the trials order-free; callers keep per-worker
// accumulators and merge them in worker order, so the result is identical
// for any worker count.
void run_sharded(long trials, int workers, const std::function<void(int, long)>& fn) {
  if (workers <= 1) {
    for (long t = 0; t < trials; ++t) fn(0, t);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (long t = w; t < trials; t += workers) fn(w, t);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (std::thread& th : threads) th.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

void merge_into(DetectionOutcome& into, const DetectionOutcome& from) {
  into.trials += from.trials;
  into.tp += from.tp;
  into.fn += from.fn;
  into.tn += from.tn;
  into.fp += from.fp;
  into.pd_events += from.pd_events;
  into.pd_violations += from.pd_violations;
}

const char* strategy_name(CheatStrategy::Kind k) {
  switch (k) {
    case CheatStrategy::Kind::kHonest:
      return "honest";
    case CheatStrategy::Kind::kModify:
      return "modify";
    case CheatStrategy::Kind::kAdd:
    default:
      return "add";
  }
}

}  // namespace

CheatStrategy parse_strategy(const std::string& text) {
  CheatStrategy s;
  const std::size_t colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (kind == "honest") {
    if (colon != std::string::npos) throw std::invalid_argument("honest takes no rate");
    return s;
  }
  if (colon == std::string::npos)
    throw std::invalid_argument("strategy needs a rate, e.g. modify:0.5: " + text);
  s.rate = parse_double(text.substr(colon + 1), "strategy rate");
  if (kind == "modify")
    s.kind = CheatStrategy::Kind::kModify;
  else if (kind == "add")
    s.kind = CheatStrategy::Kind::kAdd;
  else
    throw std::invalid_argument("unknown strategy: " + text);
  return s;
}

TestBattery parse_battery(const std::string& text, int m_t) {
  if (text == "default") return TestBattery::default_for(m_t);
  if (text == "all-l") return TestBattery::all_l(m_t);
  if (text == "all-v") return TestBattery{0, m_t, 0};
  if (text == "all-n") return TestBattery{0, 0, m_t};
  const std::vector<long> parts = parse_long_list(text);
  if (parts.size() != 3)
    throw std::invalid_argument("battery must be default|all-l|all-v|all-n or nL,nV,nN: " + text);
  TestBattery b{static_cast<int>(parts[0]), static_cast<int>(parts[1]),
                static_cast<int>(parts[2])};
  if (b.total() != m_t) throw std::invalid_argument("battery sizes must sum to m_t");
  return b;
}

std::vector<long> parse_long_list(const std::string& text) {
  std::vector<long> out;
  for (const std::string& item : split_list(text)) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(item.c_str(), &end, 10);
    if (errno != 0 || end == item.c_str() || *end != '\0')
      throw std::invalid_argument("not an integer: " + item);
    out.push_back(v);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split_list(text)) out.push_back(parse_double(item, "list item"));
  return out;
}

ProtocolFixture build_protocol_fixture(const CipherContext& ctx, const ProtocolShape& shape,
                                       std::uint64_t seed) {
  if (shape.n < 1) throw std::invalid_argument("N must be at least 1");
  if (shape.a < 1.0) throw std::invalid_argument("domain scale a must be at least 1");
  if (shape.v < 1 || shape.v > shape.n) throw std::invalid_argument("V must be in [1, N]");
  const stats::Rat eta = stats::rat_from_decimal(shape.eta);

  ProtocolFixture fx;
  fx.domain_size = static_cast<std::size_t>(std::llround(std::ceil(
      shape.a * static_cast<double>(shape.n))));
  fx.l = resolve_l(shape.n, shape.v, shape.l, eta);
  fx.r0 = stats::choose_r0(shape.n, shape.v, fx.l, eta);
  fx.dataset =
      synth_dataset(shape.n, fx.domain_size, derive_seed(seed, {tag::kFixtureDataset}));
  fx.background =
      sample_background(fx.dataset, fx.l, derive_seed(seed, {tag::kFixtureBackground})).labels;

  fx.params.budget.eps = shape.eps;
  fx.params.budget.eps_s = shape.eps_s;
  fx.params.budget.m_q = shape.m_q;
  fx.params.budget.m_t = shape.m_t;
  fx.params.budget.delta_t = shape.delta_t;
  fx.params.budget.rule = parse_rule(shape.rule);
  fx.params.budget.validate();
  fx.params.tail = shape.tail;
  fx.params.tolerance = parse_tolerance(shape.tolerance);
  fx.params.wide_trials = shape.wide_trials;
  fx.params.battery = parse_battery(shape.battery, shape.m_t);
  fx.params.v = shape.v;

  // Onboard one accepted partial view (honest uploads are rejected with
  // probability <= eta, so retry on fresh sub-seeds).
  SlotVec pv;
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Transport tr;
    PvSessionResult res = run_pv_session(ctx, tr, fx.dataset, shape.n, shape.v, fx.background,
                                         fx.r0, derive_seed(seed, {tag::kFixturePv, attempt}));
    if (res.verdict.accept) {
      pv = std::move(res.pv);
      break;
    }
  }
  if (!pv) throw std::runtime_error("honest partial view was never accepted");

  fx.assets = build_session_assets(ctx, fx.dataset, fx.background, std::move(pv), fx.params,
                                   derive_seed(seed, {tag::kFixtureAssets}));
  return fx;
}

// ---- fast session evaluator ------------------------------------------------

struct FastSessionEvaluator::TrialDraws {
  long d_l = 0;      // cheat-support deficit on the background labels
  long d_v = 0;      // ... on the partial-view support
  long excess = 0;   // extra records visible to Test N (Add)
  bool forced = false;
  std::vector<std::uint8_t> sched;
  std::vector<std::uint32_t> placement;
  std::vector<std::uint8_t> iid_cheat;
  std::vector<std::int64_t> noise;
};

FastSessionEvaluator::FastSessionEvaluator(const CipherContext& ctx, const SessionAssets& assets,
                                           const QuerySessionParams& params)
    : assets_(&assets), params_(params) {
  if (ctx.encrypted())
    throw std::invalid_argument("the fast evaluator requires the plain backend");
  params_.budget.validate();
  if (params_.battery.total() != params_.budget.m_t)
    throw std::invalid_argument("test battery size must equal m_t");
  if (assets.test_specs.size() != static_cast<std::size_t>(params_.budget.m_t) ||
      assets.test_queries.size() != assets.test_specs.size())
    throw std::invalid_argument("asset test count must equal m_t");
  scale_ = params_.budget.scale();
  window_ = ctx.window();
  for (std::size_t label : assets.true_support)
    if (label >= assets.domain_size) throw std::invalid_argument("support label outside domain");
  for (std::size_t label : assets.complement)
    if (label >= assets.domain_size) throw std::invalid_argument("filler label outside domain");

  // Plain-backend slots expose the query indicators directly, so the deficit
  // bitmaps come from the assets themselves: the background set from any
  // Test L query, the partial-view support from the stored view.
  const std::vector<TestKind> kinds = params_.battery.kinds();
  in_background_.assign(assets.domain_size, 0);
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    if (kinds[k] != TestKind::kL) continue;
    const std::vector<Slot>& entries = *assets.test_queries[k];
    if (entries.size() != assets.domain_size)
      throw std::invalid_argument("test query length must equal the domain size");
    for (std::size_t label = 0; label < entries.size(); ++label)
      in_background_[label] = entries[label].plain != 0 ? 1 : 0;
    break;
  }
  in_pv_.assign(assets.domain_size, 0);
  if (params_.battery.n_v > 0) {
    if (!assets.pv || assets.pv->size() != assets.domain_size)
      throw std::invalid_argument("Test V requires a domain-length partial view");
    for (std::size_t label = 0; label < assets.domain_size; ++label)
      in_pv_[label] = (*assets.pv)[label].plain != 0 ? 1 : 0;
  }
}

void FastSessionEvaluator::draw_trial(const CheatStrategy& strategy, std::uint64_t seed,
                                      TrialDraws& out) {
  Rng dataset_rng = derive_rng(seed, {stream::kDataset});
  Rng filler_rng = derive_rng(seed, {stream::kFiller});
  Rng cheat_rng = derive_rng(seed, {stream::kCheat});
  Rng noise_rng = derive_rng(seed, {stream::kNoise});

  out.d_l = out.d_v = out.excess = 0;
  const std::vector<std::size_t>& support = assets_->true_support;
  const std::vector<std::size_t>& complement = assets_->complement;
  if (strategy.kind != CheatStrategy::Kind::kHonest) {
    if (strategy.rate < 0) throw std::invalid_argument("cheat rate must be non-negative");
    const std::size_t count = static_cast<std::size_t>(
        std::floor(strategy.rate * static_cast<double>(support.size())));
    if (strategy.kind == CheatStrategy::Kind::kModify) {
      if (strategy.rate > 1.0) throw std::invalid_argument("modifying rate must be in [0, 1]");
      if (count > complement.size())
        throw std::invalid_argument("domain too small for the modified dataset");
      order_buf_.assign(support.begin(), support.end());
      shuffle_in_place(order_buf_, dataset_rng);
      filler_buf_.assign(complement.begin(), complement.end());
      shuffle_in_place(filler_buf_, filler_rng);
      for (std::size_t i = 0; i < count; ++i) {
        out.d_l += in_background_[order_buf_[i]];
        out.d_v += in_pv_[order_buf_[i]];
      }
    } else {
      if (count > complement.size())
        throw std::invalid_argument("domain too small for the added records");
      filler_buf_.assign(complement.begin(), complement.end());
      shuffle_in_place(filler_buf_, filler_rng);
      out.excess = static_cast<long>(count);
    }
  }

  out.sched = schedule(params_.budget.m_q, params_.budget.m_t,
                       derive_seed(seed, {stream::kSchedule}));
  const std::size_t m = out.sched.size();

  out.forced = strategy.forced_x.has_value();
  out.placement.clear();
  out.iid_cheat.assign(m, 0);
  if (strategy.kind != CheatStrategy::Kind::kHonest) {
    if (out.forced) {
      out.placement.resize(m);
      for (std::size_t i = 0; i < m; ++i) out.placement[i] = static_cast<std::uint32_t>(i);
      shuffle_in_place(out.placement, cheat_rng);
    } else {
      for (std::size_t s = 0; s < m; ++s)
        out.iid_cheat[s] = cheat_rng.unit_pos() <= strategy.p_c ? 1 : 0;
    }
  }

  out.noise.resize(m);
  for (std::size_t s = 0; s < m; ++s) out.noise[s] = noise_rng.laplace_int(scale_);
}

SessionDecision FastSessionEvaluator::decide(const TrialDraws& draws,
                                             const std::vector<std::uint8_t>& cheat) const {
  SessionDecision out;
  std::size_t ordinal = 0;
  for (std::size_t s = 0; s < draws.sched.size(); ++s) {
    if (cheat[s]) ++out.x_used;
    if (!draws.sched[s]) continue;
    const TestSpec& spec = assets_->test_specs[ordinal++];
    std::int64_t delta = 0;
    if (cheat[s]) {
      ++out.tests_cheated;
      switch (spec.kind) {
        case TestKind::kL:
          delta = -draws.d_l;
          break;
        case TestKind::kV:
          delta = -draws.d_v;
          break;
        case TestKind::kN:
          delta = draws.excess;
          break;
      }
    }
    const std::int64_t ans = spec.center + delta + draws.noise[s];
    bool violated;
    if (ans < -window_ || ans > window_) {
      violated = true;  // decode overflow fails verification
    } else {
      violated = std::abs(static_cast<double>(ans) - static_cast<double>(spec.center)) >
                 spec.noise_max;
    }
    if (violated) {
      ++out.tests_failed;
      if (cheat[s]) ++out.tests_cheated_failed;
    }
  }
  out.cheated = out.x_used > 0;
  out.flagged = out.tests_failed > 0;
  out.released = !out.flagged;
  return out;
}

SessionDecision FastSessionEvaluator::run(const CheatStrategy& strategy, std::uint64_t seed) {
  TrialDraws draws;
  draw_trial(strategy, seed, draws);
  const std::size_t m = draws.sched.size();
  std::vector<std::uint8_t> cheat(m, 0);
  if (strategy.kind != CheatStrategy::Kind::kHonest) {
    if (draws.forced) {
      const int x = *strategy.forced_x;
      if (x < 0 || static_cast<std::size_t>(x) > m)
        throw std::invalid_argument("forced incorrect-answer count exceeds m");
      for (int i = 0; i < x; ++i) cheat[draws.placement[static_cast<std::size_t>(i)]] = 1;
    } else {
      cheat = draws.iid_cheat;
    }
  }
  return decide(draws, cheat);
}

std::vector<SessionDecision> FastSessionEvaluator::run_sweep(const CheatStrategy& strategy,
                                                             const std::vector<int>& xs,
                                                             std::uint64_t seed) {
  if (strategy.kind == CheatStrategy::Kind::kHonest)
    throw std::invalid_argument("x sweep requires a cheating strategy");
  CheatStrategy forced = strategy;
  forced.forced_x = 0;
  TrialDraws draws;
  draw_trial(forced, seed, draws);
  const std::size_t m = draws.sched.size();

  std::vector<SessionDecision> out;
  out.reserve(xs.size());
  std::vector<std::uint8_t> cheat(m, 0);
  for (int x : xs) {
    if (x < 0 || static_cast<std::size_t>(x) > m)
      throw std::invalid_argument("forced incorrect-answer count exceeds m");
    std::fill(cheat.begin(), cheat.end(), 0);
    for (int i = 0; i < x; ++i) cheat[draws.placement[static_cast<std::size_t>(i)]] = 1;
    out.push_back(decide(draws, cheat));
  }
  return out;
}

// ---- drivers ----------------------------------------------------------------

std::string run_pv_threshold(const PvThresholdParams& p) {
  if (p.n < 1) throw std::invalid_argument("N must be at least 1");
  if (p.trials < 1) throw std::invalid_argument("trials must be at least 1");
  const stats::Rat eta = stats::rat_from_decimal(p.eta);
  const long l = resolve_l(p.n, p.v, p.l, eta);
  const long r0 = p.r0 > 0 ? p.r0 : stats::choose_r0(p.n, p.v, l, eta);
  const std::size_t domain_size = static_cast<std::size_t>(
      std::llround(std::ceil(p.a * static_cast<double>(p.n))));

  EcGroup group;
  Rng keygen = derive_rng(p.seed, {stream::kKeygen});
  const CipherContext ctx =
      p.encrypted ? CipherContext::make_encrypted(group, 4, keygen) : CipherContext::make_plain(4);

  const HistogramDataset ds =
      synth_dataset(p.n, domain_size, derive_seed(p.seed, {tag::kFixtureDataset}));
  const std::vector<std::size_t> background =
      sample_background(ds, l, derive_seed(p.seed, {tag::kFixtureBackground})).labels;

  std::vector<long> grid = p.n_grid.empty() ? std::vector<long>{0, p.n / 4, p.n / 2,
                                                                3 * p.n / 4, p.n}
                                            : parse_long_list(p.n_grid);

  const int workers = std::max(p.workers, 1);
  std::string csv = "n_true,trials,accepted,accept_rate,theory_accept\n";
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const long n_true = grid[gi];
    std::vector<long> accepted_w(static_cast<std::size_t>(workers), 0);
    run_sharded(p.trials, workers, [&](int w, long t) {
      Transport tr;
      const PvSessionResult res =
          run_pv_session(ctx, tr, ds, n_true, p.v, background, r0,
                         derive_seed(p.seed, {tag::kPvTrial, gi, static_cast<std::uint64_t>(t)}));
      if (res.verdict.accept) ++accepted_w[static_cast<std::size_t>(w)];
    });
    long accepted = 0;
    for (long a : accepted_w) accepted += a;
    const double rate = static_cast<double>(accepted) / static_cast<double>(p.trials);
    const double theory = stats::to_double(theory_accept(p.n, p.v, l, r0, n_true));
    csv += std::to_string(n_true) + "," + std::to_string(p.trials) + "," +
           std::to_string(accepted) + "," + fmt(rate) + "," + fmt(theory) + "\n";
  }
  return csv;
}

std::string run_lmin(const LminParams& p) {
  const stats::Rat eta = stats::rat_from_decimal(p.eta);
  const double rho = parse_double(p.rho, "rho");
  std::string csv = "n,v,l_min\n";
  for (long n : parse_long_list(p.n_grid)) {
    const long v = std::lround(rho * static_cast<double>(n));
    csv += std::to_string(n) + "," + std::to_string(v) + "," +
           std::to_string(stats::l_min(n, rho, eta)) + "\n";
  }
  return csv;
}

std::string run_nmin_table(const NminTableParams& p) {
  std::string csv = "theta,r0,v_opt,n_min,note\n";
  for (const std::string& theta_text : split_list(p.thetas)) {
    const stats::Rat theta = stats::rat_from_decimal(theta_text);
    std::string row = theta_text + ",";
    try {
      const stats::VOpt vo = stats::v_opt(p.n, p.v, p.l, theta);
      const long nm = stats::n_min(p.n, p.v, vo.v, theta);
      row += std::to_string(vo.r0) + "," + std::to_string(vo.v) + "," + std::to_string(nm) + ",";
    } catch (const std::domain_error&) {
      // No r0 reaches theta even at v = V: the adversary must keep everything.
      row += "0," + std::to_string(p.v) + "," + std::to_string(p.n) + ",unattainable";
    }
    csv += row + "\n";
  }
  return csv;
}

std::string run_detection(const DetectionParams& p) {
  if (p.trials < 1) throw std::invalid_argument("trials must be at least 1");
  const int m = p.shape.m_q + p.shape.m_t;

  std::vector<int> xs;
  if (p.x_values.empty()) {
    for (int x = 1; x <= m; ++x) xs.push_back(x);
  } else {
    for (long v : parse_long_list(p.x_values)) {
      if (v > m) throw std::invalid_argument("x exceeds the query count m");
      if (v >= 1) xs.push_back(static_cast<int>(v));  // x = 0: no cheating, skipped
    }
  }

  EcGroup group;
  Rng keygen = derive_rng(p.seed, {stream::kKeygen});
  const bool encrypted = p.full_protocol && p.encrypted;
  const CipherContext ctx = encrypted
                                ? CipherContext::make_encrypted(group, p.shape.window, keygen)
                                : CipherContext::make_plain(p.shape.window);
  const ProtocolFixture fx = build_protocol_fixture(ctx, p.shape, p.seed);
  const int workers = std::max(p.workers, 1);

  // Per-worker protocol state, built once: the evaluator's bitmaps and the
  // transport's inboxes are the only mutable pieces.
  std::vector<FastSessionEvaluator> fasts;
  std::vector<Transport> transports(static_cast<std::size_t>(workers));
  if (!p.full_protocol)
    for (int w = 0; w < workers; ++w) fasts.emplace_back(ctx, fx.assets, fx.params);

  std::string csv =
      "strategy,rate,x,trials,tp,fn,tn,fp,accuracy,fp_rate,pd_events,pd_violations,pd_hat\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (const std::string& strat_text : split_list(p.strategies)) {
    const CheatStrategy base = parse_strategy(strat_text);
    if (base.kind == CheatStrategy::Kind::kHonest) {
      std::vector<DetectionOutcome> o_w(static_cast<std::size_t>(workers));
      run_sharded(p.trials, workers, [&](int w, long t) {
        const std::uint64_t s =
            derive_seed(p.seed, {tag::kTrial, static_cast<std::uint64_t>(t)});
        const std::size_t wi = static_cast<std::size_t>(w);
        if (p.full_protocol)
          add_decision(o_w[wi], decision_of(run_query_session(ctx, transports[wi], fx.assets,
                                                              fx.params, base, s)));
        else
          add_decision(o_w[wi], fasts[wi].run(base, s));
      });
      DetectionOutcome o;
      for (const DetectionOutcome& part : o_w) merge_into(o, part);
      const double fp_rate = static_cast<double>(o.fp) / static_cast<double>(o.fp + o.tn);
      csv += std::string("honest,0,0,") + std::to_string(o.trials) + ",0,0," +
             std::to_string(o.tn) + "," + std::to_string(o.fp) + "," + fmt(nan) + "," +
             fmt(fp_rate) + ",0,0," + fmt(nan) + "\n";
      continue;
    }

    std::vector<std::vector<DetectionOutcome>> per_x_w(
        static_cast<std::size_t>(workers), std::vector<DetectionOutcome>(xs.size()));
    run_sharded(p.trials, workers, [&](int w, long t) {
      const std::uint64_t s = derive_seed(p.seed, {tag::kTrial, static_cast<std::uint64_t>(t)});
      const std::size_t wi = static_cast<std::size_t>(w);
      if (p.full_protocol) {
        for (std::size_t xi = 0; xi < xs.size(); ++xi) {
          CheatStrategy strat = base;
          strat.forced_x = xs[xi];
          add_decision(per_x_w[wi][xi], decision_of(run_query_session(ctx, transports[wi],
                                                                      fx.assets, fx.params,
                                                                      strat, s)));
        }
      } else {
        const std::vector<SessionDecision> swept = fasts[wi].run_sweep(base, xs, s);
        for (std::size_t xi = 0; xi < xs.size(); ++xi) add_decision(per_x_w[wi][xi], swept[xi]);
      }
    });
    std::vector<DetectionOutcome> per_x(xs.size());
    for (const std::vector<DetectionOutcome>& part : per_x_w)
      for (std::size_t xi = 0; xi < xs.size(); ++xi) merge_into(per_x[xi], part[xi]);
    for (std::size_t xi = 0; xi < xs.size(); ++xi) {
      const DetectionOutcome& o = per_x[xi];
      csv += std::string(strategy_name(base.kind)) + "," + fmt(base.rate) + "," +
             std::to_string(xs[xi]) + "," + std::to_string(o.trials) + "," +
             std::to_string(o.tp) + "," + std::to_string(o.fn) + "," + std::to_string(o.tn) +
             "," + std::to_string(o.fp) + "," + fmt(o.accuracy()) + "," + fmt(nan) + "," +
             std::to_string(o.pd_events) + "," + std::to_string(o.pd_violations) + "," +
             fmt(o.p_d_hat()) + "\n";
    }
  }
  return csv;
}

std::string run_eq6(const Eq6Params& p) {
  if (p.pd_trials < 1 || p.mc_trials < 1)
    throw std::invalid_argument("trial counts must be at least 1");
  const CipherContext ctx = CipherContext::make_plain(p.shape.window);
  const ProtocolFixture fx = build_protocol_fixture(ctx, p.shape, p.seed);
  const int m_q = p.shape.m_q;
  const int m_t = p.shape.m_t;
  const int m = m_q + m_t;
  const double p_t = static_cast<double>(m_t) / static_cast<double>(m);
  const std::vector<TestKind> kinds = fx.params.battery.kinds();
  const int workers = std::max(p.workers, 1);
  std::vector<Transport> transports(static_cast<std::size_t>(workers));

  std::string csv =
      "strategy,rate,p_c,pd_sessions,pd_hat_l,pd_hat_v,pd_hat_n,pd_hat_mean,"
      "mc_eq6,eq6_closed,z_eq6,mc_protocol,protocol_closed,z_protocol,"
      "fixed_tests_closed,model_gap\n";

  const std::vector<std::string> strategy_texts = split_list(p.strategies);
  const std::vector<double> pcs = parse_double_list(p.p_c_grid);

  for (std::size_t si = 0; si < strategy_texts.size(); ++si) {
    CheatStrategy strat = parse_strategy(strategy_texts[si]);
    if (strat.kind == CheatStrategy::Kind::kHonest)
      throw std::invalid_argument("eq6-check requires cheating strategies");

    // Measure the per-kind test violation rate over full sessions in which
    // every answer uses the fake dataset.
    strat.p_c = 1.0;
    strat.forced_x.reset();
    std::vector<std::array<long, 3>> events_w(static_cast<std::size_t>(workers), {0, 0, 0});
    std::vector<std::array<long, 3>> viols_w(static_cast<std::size_t>(workers), {0, 0, 0});
    run_sharded(p.pd_trials, workers, [&](int w, long t) {
      const std::size_t wi = static_cast<std::size_t>(w);
      const QuerySessionResult r = run_query_session(
          ctx, transports[wi], fx.assets, fx.params, strat,
          derive_seed(p.seed, {tag::kPdMeasure, si, static_cast<std::uint64_t>(t)}));
      for (int j = 0; j < m_t; ++j) {
        const int k = static_cast<int>(kinds[static_cast<std::size_t>(j)]);
        ++events_w[wi][static_cast<std::size_t>(k)];
        const auto& decoded = r.test_decoded[static_cast<std::size_t>(j)];
        const TestSpec& spec = fx.assets.test_specs[static_cast<std::size_t>(j)];
        const bool violated =
            !decoded || std::abs(static_cast<double>(*decoded) -
                                 static_cast<double>(spec.center)) > spec.noise_max;
        if (violated) ++viols_w[wi][static_cast<std::size_t>(k)];
      }
    });
    long events[3] = {0, 0, 0};
    long viols[3] = {0, 0, 0};
    for (int w = 0; w < workers; ++w)
      for (int k = 0; k < 3; ++k) {
        events[k] += events_w[static_cast<std::size_t>(w)][static_cast<std::size_t>(k)];
        viols[k] += viols_w[static_cast<std::size_t>(w)][static_cast<std::size_t>(k)];
      }
    double pd_kind[3];
    for (int k = 0; k < 3; ++k)
      pd_kind[k] = events[k] ? static_cast<double>(viols[k]) / static_cast<double>(events[k])
                             : std::numeric_limits<double>::quiet_NaN();
    const int counts[3] = {fx.params.battery.n_l, fx.params.battery.n_v, fx.params.battery.n_n};
    double pd_bar = 0;
    double var_pd_bar = 0;
    double var_pd_kind[3] = {0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      if (!counts[k]) continue;
      pd_bar += counts[k] * pd_kind[k];
      var_pd_kind[k] =
          pd_kind[k] * (1.0 - pd_kind[k]) / static_cast<double>(events[k]);
      const double w = static_cast<double>(counts[k]) / static_cast<double>(m_t);
      var_pd_bar += w * w * var_pd_kind[k];
    }
    pd_bar /= m_t;

    for (double pc : pcs) {
      if (pc < 0 || pc > 1) throw std::invalid_argument("p_c must be in [0, 1]");
      // Model A: Eq.-6 world — every slot is a test independently with
      // probability p_t.
      Rng mc6 = derive_rng(p.seed, {tag::kMcEq6, si, static_cast<std::uint64_t>(std::llround(pc * 1e6))});
      long det6 = 0;
      for (long t = 0; t < p.mc_trials; ++t) {
        bool detected = false;
        for (int s = 0; s < m; ++s) {
          const bool is_test = mc6.unit_pos() <= p_t;
          const bool cheats = mc6.unit_pos() <= pc;
          const bool violates = mc6.unit_pos() <= pd_bar;
          if (is_test && cheats && violates) detected = true;
        }
        if (detected) ++det6;
      }
      const double mc_eq6 = static_cast<double>(det6) / static_cast<double>(p.mc_trials);
      const double eq6_closed = stats::detection_prob(m, p_t, pc, pd_bar);

      // Model B: the deployed schedule — exactly m_t tests, each cheated
      // independently with p_c and violated at its kind's measured rate.
      Rng mcp = derive_rng(p.seed, {tag::kMcProtocol, si, static_cast<std::uint64_t>(std::llround(pc * 1e6))});
      long detp = 0;
      for (long t = 0; t < p.mc_trials; ++t) {
        bool detected = false;
        for (int j = 0; j < m_t; ++j) {
          const int k = static_cast<int>(kinds[static_cast<std::size_t>(j)]);
          const bool cheats = mcp.unit_pos() <= pc;
          const bool violates = mcp.unit_pos() <= pd_kind[k];
          if (cheats && violates) detected = true;
        }
        if (detected) ++detp;
      }
      const double mc_protocol = static_cast<double>(detp) / static_cast<double>(p.mc_trials);
      double protocol_closed = 1.0;
      for (int k = 0; k < 3; ++k)
        if (counts[k]) protocol_closed *= std::pow(1.0 - pc * pd_kind[k], counts[k]);
      protocol_closed = 1.0 - protocol_closed;

      // z-scores fold the Monte-Carlo error together with the measurement
      // error of p_d (delta method).
      const double mc_var6 = mc_eq6 * (1.0 - mc_eq6) / static_cast<double>(p.mc_trials);
      const double d_eq6_d_pd =
          m * p_t * pc * std::pow(1.0 - p_t * pc * pd_bar, m - 1);
      const double sigma6 = std::sqrt(mc_var6 + d_eq6_d_pd * d_eq6_d_pd * var_pd_bar);
      const double z6 = sigma6 > 0 ? (mc_eq6 - eq6_closed) / sigma6 : 0.0;

      const double mc_varp = mc_protocol * (1.0 - mc_protocol) / static_cast<double>(p.mc_trials);
      double var_closed_p = 0;
      const double survive = 1.0 - protocol_closed;
      for (int k = 0; k < 3; ++k) {
        if (!counts[k]) continue;
        const double dk = survive * counts[k] * pc / (1.0 - pc * pd_kind[k]);
        var_closed_p += dk * dk * var_pd_kind[k];
      }
      const double sigmap = std::sqrt(mc_varp + var_closed_p);
      const double zp = sigmap > 0 ? (mc_protocol - protocol_closed) / sigmap : 0.0;

      const double fixed_closed = stats::detection_prob_fixed_tests(m_t, pc, pd_bar);
      csv += std::string(strategy_name(strat.kind)) + "," + fmt(strat.rate) + "," + fmt(pc) +
             "," + std::to_string(p.pd_trials) + "," + fmt(pd_kind[0]) + "," + fmt(pd_kind[1]) +
             "," + fmt(pd_kind[2]) + "," + fmt(pd_bar) + "," + fmt(mc_eq6) + "," +
             fmt(eq6_closed) + "," + fmt(z6) + "," + fmt(mc_protocol) + "," +
             fmt(protocol_closed) + "," + fmt(zp) + "," + fmt(fixed_closed) + "," +
             fmt(protocol_closed - eq6_closed) + "\n";
    }
  }
  return csv;
}

// ---- manifest round-trip ----------------------------------------------------

namespace {

void shape_to_manifest(const ProtocolShape& s, Manifest& m) {
  m.set_i64("n", s.n);
  m.set_double("a", s.a);
  m.set_i64("v", s.v);
  m.set_i64("l", s.l);
  m.set("eta", s.eta);
  m.set_i64("m_q", s.m_q);
  m.set_i64("m_t", s.m_t);
  m.set_double("eps", s.eps);
  m.set_double("eps_s", s.eps_s);
  m.set_double("delta_t", s.delta_t);
  m.set_double("tail", s.tail);
  m.set("rule", s.rule);
  m.set("tolerance", s.tolerance);
  m.set_i64("wide_trials", s.wide_trials);
  m.set("battery", s.battery);
  m.set_i64("window", s.window);
}

ProtocolShape shape_from_manifest(const Manifest& m) {
  ProtocolShape s;
  s.n = m.get_i64("n");
  s.a = m.get_double("a");
  s.v = m.get_i64("v");
  s.l = m.get_i64("l");
  s.eta = m.get("eta");
  s.m_q = static_cast<int>(m.get_i64("m_q"));
  s.m_t = static_cast<int>(m.get_i64("m_t"));
  s.eps = m.get_double("eps");
  s.eps_s = m.get_double("eps_s");
  s.delta_t = m.get_double("delta_t");
  s.tail = m.get_double("tail");
  s.rule = m.get("rule");
  s.tolerance = m.get("tolerance");
  s.wide_trials = m.get_i64("wide_trials");
  s.battery = m.get("battery");
  s.window = m.get_i64("window");
  return s;
}

}  // namespace

Manifest to_manifest(const PvThresholdParams& p) {
  Manifest m;
  m.set("experiment", "pv-threshold");
  m.set_i64("n", p.n);
  m.set_double("a", p.a);
  m.set_i64("v", p.v);
  m.set_i64("l", p.l);
  m.set("eta", p.eta);
  m.set_i64("r0", p.r0);
  m.set_i64("trials", p.trials);
  m.set("n_grid", p.n_grid);
  m.set_u64("encrypted", p.encrypted ? 1 : 0);
  m.set_u64("seed", p.seed);
  return m;
}

Manifest to_manifest(const LminParams& p) {
  Manifest m;
  m.set("experiment", "lmin");
  m.set("eta", p.eta);
  m.set("rho", p.rho);
  m.set("n_grid", p.n_grid);
  return m;
}

Manifest to_manifest(const NminTableParams& p) {
  Manifest m;
  m.set("experiment", "nmin-table");
  m.set_i64("n", p.n);
  m.set_i64("v", p.v);
  m.set_i64("l", p.l);
  m.set("eta", p.eta);
  m.set("thetas", p.thetas);
  return m;
}

Manifest to_manifest(const DetectionParams& p) {
  Manifest m;
  m.set("experiment", "detection");
  shape_to_manifest(p.shape, m);
  m.set("strategies", p.strategies);
  m.set("x_values", p.x_values);
  m.set_i64("trials", p.trials);
  m.set_u64("full_protocol", p.full_protocol ? 1 : 0);
  m.set_u64("encrypted", p.encrypted ? 1 : 0);
  m.set_u64("seed", p.seed);
  return m;
}

Manifest to_manifest(const Eq6Params& p) {
  Manifest m;
  m.set("experiment", "eq6-check");
  shape_to_manifest(p.shape, m);
  m.set("strategies", p.strategies);
  m.set("p_c_grid", p.p_c_grid);
  m.set_i64("pd_trials", p.pd_trials);
  m.set_i64("mc_trials", p.mc_trials);
  m.set_u64("seed", p.seed);
  return m;
}

ExperimentRun run_from_manifest(const Manifest& m) {
  const std::string name = m.get("experiment");
  ExperimentRun out;
  out.experiment = name;
  if (name == "pv-threshold") {
    PvThresholdParams p;
    p.n = m.get_i64("n");
    p.a = m.get_double("a");
    p.v = m.get_i64("v");
    p.l = m.get_i64("l");
    p.eta = m.get("eta");
    p.r0 = m.get_i64("r0");
    p.trials = m.get_i64("trials");
    p.n_grid = m.get_or("n_grid", "");
    p.encrypted = m.get_u64("encrypted") != 0;
    p.seed = m.get_u64("seed");
    out.csv = run_pv_threshold(p);
  } else if (name == "lmin") {
    LminParams p;
    p.eta = m.get("eta");
    p.rho = m.get("rho");
    p.n_grid = m.get("n_grid");
    out.csv = run_lmin(p);
  } else if (name == "nmin-table") {
    NminTableParams p;
    p.n = m.get_i64("n");
    p.v = m.get_i64("v");
    p.l = m.get_i64("l");
    p.eta = m.get("eta");
    p.thetas = m.get("thetas");
    out.csv = run_nmin_table(p);
  } else if (name == "detection") {
    DetectionParams p;
    p.shape = shape_from_manifest(m);
    p.strategies = m.get("strategies");
    p.x_values = m.get_or("x_values", "");
    p.trials = m.get_i64("trials");
    p.full_protocol = m.get_u64("full_protocol") != 0;
    p.encrypted = m.get_u64("encrypted") != 0;
    p.seed = m.get_u64("seed");
    out.csv = run_detection(p);
  } else if (name == "eq6-check") {
    Eq6Params p;
    p.shape = shape_from_manifest(m);
    p.strategies = m.get("strategies");
    p.p_c_grid = m.get("p_c_grid");
    p.pd_trials = m.get_i64("pd_trials");
    p.mc_trials = m.get_i64("mc_trials");
    p.seed = m.get_u64("seed");
    out.csv = run_eq6(p);
  } else {
    throw std::invalid_argument("unknown experiment in manifest: " + name);
  }
  return out;
}

}  // namespace dataring
