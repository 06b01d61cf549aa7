#include "dataring/session.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dataring {

namespace {

constexpr const char* kParticipant = "participant";
constexpr const char* kServerOne = "s1";
constexpr const char* kServerTwo = "s2";
constexpr const char* kQuerier = "querier";

std::vector<std::size_t> complement_of(const HistogramDataset& ds) {
  std::vector<std::size_t> out;
  out.reserve(ds.domain_size() - static_cast<std::size_t>(ds.record_count()));
  for (std::size_t i = 0; i < ds.domain_size(); ++i)
    if (!ds.val(i)) out.push_back(i);
  return out;
}

}  // namespace

TestBattery TestBattery::default_for(int m_t) {
  if (m_t < 0) throw std::invalid_argument("negative test count");
  TestBattery b;
  b.n_n = m_t / 2;
  const int rest = m_t - b.n_n;
  b.n_l = (rest + 1) / 2;
  b.n_v = rest / 2;
  return b;
}

std::vector<TestKind> TestBattery::kinds() const {
  std::vector<TestKind> out;
  out.reserve(static_cast<std::size_t>(total()));
  for (int i = 0; i < n_l; ++i) out.push_back(TestKind::kL);
  for (int i = 0; i < n_v; ++i) out.push_back(TestKind::kV);
  for (int i = 0; i < n_n; ++i) out.push_back(TestKind::kN);
  return out;
}

double tolerance_noise_max(const PrivacyBudget& budget, double tail, ToleranceMode mode,
                           long wide_trials) {
  if (tail <= 0 || tail >= 1) throw std::invalid_argument("tail must be in (0, 1)");
  const double scale = budget.scale();
  if (mode == ToleranceMode::kStrict) return scale * std::log(1.0 / tail);
  const double sessions = static_cast<double>(std::max(wide_trials, 1L));
  return scale * std::log(std::max(budget.m_t, 1) * sessions / tail);
}

SessionAssets build_session_assets(const CipherContext& ctx, const HistogramDataset& ds,
                                   const std::vector<std::size_t>& background, SlotVec pv,
                                   const QuerySessionParams& params, std::uint64_t seed) {
  params.budget.validate();
  if (params.battery.total() != params.budget.m_t)
    throw std::invalid_argument("test battery size must equal m_t");
  if (params.battery.n_v > 0 && (!pv || pv->empty()))
    throw std::logic_error("Test V requires a verified partial view");

  SessionAssets assets;
  assets.domain_size = ds.domain_size();
  assets.true_support = ds.set_labels();
  assets.complement = complement_of(ds);
  assets.pv = std::move(pv);

  Rng nonce = derive_rng(seed, {stream::kNonce});
  const double nm =
      tolerance_noise_max(params.budget, params.tail, params.tolerance, params.wide_trials);

  // Real count queries: random label subsets at density 1/2.
  assets.real_queries.reserve(static_cast<std::size_t>(params.budget.m_q));
  for (int q = 0; q < params.budget.m_q; ++q) {
    Rng bits = derive_rng(seed, {stream::kBackground, static_cast<std::uint64_t>(q)});
    QueryVector qv;
    qv.bits.resize(assets.domain_size);
    for (auto& b : qv.bits) b = static_cast<std::uint8_t>(bits.below(2));
    assets.real_queries.push_back(
        std::make_shared<const std::vector<Slot>>(std::move(encrypt_query(ctx, qv, nonce).entries)));
  }

  for (TestKind kind : params.battery.kinds()) {
    std::pair<EncryptedQuery, TestSpec> test = [&] {
      switch (kind) {
        case TestKind::kL:
          return make_test_l(ctx, background, assets.domain_size, nm, nonce);
        case TestKind::kV:
          return make_test_v(ctx, *assets.pv, /*pv_verified=*/true, params.v, nm, nonce);
        case TestKind::kN:
        default:
          return make_test_n(ctx, assets.domain_size, ds.record_count(), nm, nonce);
      }
    }();
    assets.test_queries.push_back(
        std::make_shared<const std::vector<Slot>>(std::move(test.first.entries)));
    assets.test_specs.push_back(test.second);
  }
  return assets;
}

PvSessionResult run_pv_session(const CipherContext& ctx, Transport& transport,
                               const HistogramDataset& true_ds, long n_true, long v,
                               const std::vector<std::size_t>& background, long r0,
                               std::uint64_t seed) {
  const long n = true_ds.record_count();
  if (n_true < 0 || n_true > n) throw std::invalid_argument("kept-record count must be in [0, N]");
  if (v < 0 || v > n) throw std::invalid_argument("sample size must be in [0, N]");

  // Adversary dataset D': n_true real labels plus N - n_true fillers
  // (Theorem-2 normalized form); n_true = N is the honest participant.
  const HistogramDataset* upload_ds = &true_ds;
  HistogramDataset fake;
  if (n_true < n) {
    std::vector<std::size_t> kept = true_ds.set_labels();
    Rng dataset_rng = derive_rng(seed, {stream::kDataset});
    shuffle_in_place(kept, dataset_rng);
    kept.resize(static_cast<std::size_t>(n_true));
    std::vector<std::size_t> fillers = complement_of(true_ds);
    if (fillers.size() < static_cast<std::size_t>(n - n_true))
      throw std::invalid_argument("domain too small for the fake dataset");
    Rng filler_rng = derive_rng(seed, {stream::kFiller});
    shuffle_in_place(fillers, filler_rng);
    fillers.resize(static_cast<std::size_t>(n - n_true));
    kept.insert(kept.end(), fillers.begin(), fillers.end());
    fake = HistogramDataset::from_labels(true_ds.domain_size(), kept);
    upload_ds = &fake;
  }

  PvSessionResult result;
  try {
    ParticipantPvOutput prep =
        participant_prepare(*upload_ds, derive_seed(seed, {stream::kPermutation}));
    transport.send(kParticipant, kServerOne, MsgKind::kLbs, std::move(prep.lbs));
    transport.send(kParticipant, kServerTwo, MsgKind::kSigmaInv, std::move(prep.sigma_inv));

    ServerOnePvRole s1(ctx);
    Message lbs_msg = transport.recv(kServerOne);
    s1.receive_lbs(std::move(std::get<PvUpload>(lbs_msg.body)));
    Rng selector_rng = derive_rng(seed, {stream::kSelector});
    Rng s1_nonce = derive_rng(seed, {stream::kNonce, 1});
    std::vector<Slot> enc = s1.sample(v, selector_rng, s1_nonce);
    transport.send(kServerOne, kServerTwo, MsgKind::kEncLbs,
                   std::make_shared<const std::vector<Slot>>(std::move(enc)));

    ServerTwoPvRole s2(ctx);
    for (int i = 0; i < 2; ++i) {
      Message msg = transport.recv(kServerTwo);
      if (msg.kind == MsgKind::kSigmaInv)
        s2.receive_sigma_inv(std::move(std::get<std::vector<std::uint32_t>>(msg.body)));
      else
        s2.receive_encrypted(std::vector<Slot>(*std::get<SlotVec>(msg.body)));
    }
    Rng s2_nonce = derive_rng(seed, {stream::kNonce, 2});
    auto pv = std::make_shared<const std::vector<Slot>>(s2.finalize(s2_nonce));

    result.verdict = verify_pv(ctx, *pv, background, r0);
    result.pv = std::move(pv);
  } catch (const std::invalid_argument& e) {
    result.verdict = PvVerdict{false, 0, {}, std::string("protocol abort: ") + e.what()};
  } catch (const std::logic_error& e) {
    result.verdict = PvVerdict{false, 0, {}, std::string("protocol abort: ") + e.what()};
  }
  return result;
}

std::vector<std::size_t> build_cheat_support(const CheatStrategy& strategy,
                                             const std::vector<std::size_t>& true_support,
                                             const std::vector<std::size_t>& complement,
                                             Rng& dataset_rng, Rng& filler_rng,
                                             std::vector<std::size_t>* removed_out,
                                             std::vector<std::size_t>* added_out) {
  if (removed_out) removed_out->clear();
  if (added_out) added_out->clear();
  if (strategy.kind == CheatStrategy::Kind::kHonest) return true_support;
  if (strategy.rate < 0) throw std::invalid_argument("cheat rate must be non-negative");
  const std::size_t n = true_support.size();
  const std::size_t count = static_cast<std::size_t>(
      std::floor(strategy.rate * static_cast<double>(n)));

  if (strategy.kind == CheatStrategy::Kind::kModify) {
    if (strategy.rate > 1.0) throw std::invalid_argument("modifying rate must be in [0, 1]");
    if (count > complement.size())
      throw std::invalid_argument("domain too small for the modified dataset");
    // Full shuffles make the removal/addition sets prefix-nested in the rate.
    std::vector<std::size_t> order = true_support;
    shuffle_in_place(order, dataset_rng);
    std::vector<std::size_t> fillers = complement;
    shuffle_in_place(fillers, filler_rng);
    std::vector<std::size_t> support(order.begin() + static_cast<std::ptrdiff_t>(count),
                                     order.end());
    support.insert(support.end(), fillers.begin(),
                   fillers.begin() + static_cast<std::ptrdiff_t>(count));
    if (removed_out) removed_out->assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    if (added_out) added_out->assign(fillers.begin(), fillers.begin() + static_cast<std::ptrdiff_t>(count));
    return support;
  }

  // Add: append floor(rate*N) non-dataset labels.
  if (count > complement.size())
    throw std::invalid_argument("domain too small for the added records");
  std::vector<std::size_t> additions = complement;
  shuffle_in_place(additions, filler_rng);
  additions.resize(count);
  std::vector<std::size_t> support = true_support;
  support.insert(support.end(), additions.begin(), additions.end());
  if (added_out) *added_out = std::move(additions);
  return support;
}

QuerySessionResult run_query_session(const CipherContext& ctx, Transport& transport,
                                     const SessionAssets& assets,
                                     const QuerySessionParams& params,
                                     const CheatStrategy& strategy, std::uint64_t seed) {
  params.budget.validate();
  if (params.battery.total() != params.budget.m_t)
    throw std::invalid_argument("test battery size must equal m_t");
  if (assets.real_queries.size() != static_cast<std::size_t>(params.budget.m_q))
    throw std::invalid_argument("asset real-query count must equal m_q");

  PrivacyBudget budget = params.budget;  // fresh consumable copy per session
  Rng dataset_rng = derive_rng(seed, {stream::kDataset});
  Rng filler_rng = derive_rng(seed, {stream::kFiller});
  Rng keygen_rng = derive_rng(seed, {stream::kKeygen});
  Rng cheat_rng = derive_rng(seed, {stream::kCheat});
  Rng noise_rng = derive_rng(seed, {stream::kNoise});
  Rng query_nonce = derive_rng(seed, {stream::kNonce, 1});
  Rng answer_nonce = derive_rng(seed, {stream::kNonce, 2});
  Rng release_nonce_s1 = derive_rng(seed, {stream::kNonce, 3});
  Rng release_nonce_s2 = derive_rng(seed, {stream::kNonce, 4});

  const KeyPair querier = ctx.make_recipient_key(keygen_rng);
  const std::vector<std::size_t> star_support =
      build_cheat_support(strategy, assets.true_support, assets.complement, dataset_rng, filler_rng);

  const std::vector<std::uint8_t> sched =
      schedule(budget.m_q, budget.m_t, derive_seed(seed, {stream::kSchedule}));
  const std::size_t m = sched.size();

  // Cheat plan: either exactly x fake-dataset answers at uniform positions
  // (the placement permutation is drawn in full, so plans are prefix-nested
  // in x), or an independent Bernoulli(p_c) draw per query.
  std::vector<std::uint8_t> cheat(m, 0);
  if (strategy.kind != CheatStrategy::Kind::kHonest) {
    if (strategy.forced_x) {
      const int x = *strategy.forced_x;
      if (x < 0 || static_cast<std::size_t>(x) > m)
        throw std::invalid_argument("forced incorrect-answer count exceeds m");
      std::vector<std::uint32_t> placement(m);
      for (std::size_t i = 0; i < m; ++i) placement[i] = static_cast<std::uint32_t>(i);
      shuffle_in_place(placement, cheat_rng);
      for (int i = 0; i < x; ++i) cheat[placement[static_cast<std::size_t>(i)]] = 1;
    } else {
      for (std::size_t s = 0; s < m; ++s)
        cheat[s] = cheat_rng.unit_pos() <= strategy.p_c ? 1 : 0;
    }
  }

  // Querier submits its real queries to the server front end.
  for (const SlotVec& q : assets.real_queries)
    transport.send(kQuerier, kServerOne, MsgKind::kQuery, q);
  std::vector<SlotVec> real_in;
  real_in.reserve(assets.real_queries.size());
  while (transport.has_message(kServerOne))
    real_in.push_back(std::get<SlotVec>(transport.recv(kServerOne).body));

  QuerySessionResult result;
  std::vector<Slot> answers(m);
  std::size_t next_real = 0;
  std::size_t next_test = 0;
  for (std::size_t s = 0; s < m; ++s) {
    SlotVec outgoing;
    if (sched[s]) {
      // Reusing a test re-randomizes all entries (fresh bytes on the wire);
      // in plain mode re-randomization is the identity, so the asset is
      // forwarded as-is.
      const SlotVec& tq = assets.test_queries[next_test++];
      if (ctx.encrypted()) {
        auto fresh = std::make_shared<std::vector<Slot>>(*tq);
        for (Slot& slot : *fresh) slot = ctx.rerandomize(slot, query_nonce);
        outgoing = std::move(fresh);
      } else {
        outgoing = tq;
      }
    } else {
      outgoing = real_in.at(next_real++);
    }
    transport.send(kServerOne, kParticipant, MsgKind::kQuery, std::move(outgoing));

    // Target answers immediately, with D* when this query is cheated.
    Message qmsg = transport.recv(kParticipant);
    const std::vector<Slot>& entries = *std::get<SlotVec>(qmsg.body);
    const std::vector<std::size_t>& support = cheat[s] ? star_support : assets.true_support;
    Slot answer = answer_query(ctx, support, entries, budget, noise_rng, answer_nonce);
    transport.send(kParticipant, kServerOne, MsgKind::kAnswer, std::move(answer));

    Message amsg = transport.recv(kServerOne);
    answers[s] = std::move(std::get<Slot>(amsg.body));
    ++result.answers_given;
    if (cheat[s]) {
      ++result.x_used;
      if (sched[s]) ++result.tests_cheated;
    }
  }
  result.cheated = result.x_used > 0;

  // Tests are verified only after all m answers have arrived.
  std::vector<Slot> real_answers;
  real_answers.reserve(budget.m_q);
  std::size_t test_ordinal = 0;
  for (std::size_t s = 0; s < m; ++s) {
    if (!sched[s]) {
      real_answers.push_back(answers[s]);
      continue;
    }
    const AnswerVerdict v = verify_answer(ctx, answers[s], assets.test_specs[test_ordinal++]);
    result.test_decoded.push_back(v.decoded);
    if (!v.pass) {
      ++result.tests_failed;
      if (cheat[s]) ++result.tests_cheated_failed;
    }
  }
  result.flagged = result.tests_failed > 0;

  auto released = release_answers(ctx, real_answers, querier.pub, !result.flagged,
                                  release_nonce_s1, release_nonce_s2);
  if (released) {
    result.released = true;
    transport.send(kServerOne, kQuerier, MsgKind::kRelease,
                   std::make_shared<const std::vector<Slot>>(std::move(*released)));
    Message rmsg = transport.recv(kQuerier);
    for (const Slot& slot : *std::get<SlotVec>(rmsg.body))
      result.querier_values.push_back(ctx.recipient_decrypt(querier, slot));
  }
  return result;
}

void DetectionOutcome::add(const QuerySessionResult& r) {
  ++trials;
  if (r.cheated)
    r.flagged ? ++tp : ++fn;
  else
    r.flagged ? ++fp : ++tn;
  pd_events += r.tests_cheated;
  pd_violations += r.tests_cheated_failed;
}

double DetectionOutcome::accuracy() const {
  if (tp + fn == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double DetectionOutcome::p_d_hat() const {
  if (pd_events == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(pd_violations) / static_cast<double>(pd_events);
}

}  // namespace dataring
