// dataring: the artifact's command-line interface.
//
//   gen-data / ingest   synthetic or CSV datasets -> bit image + manifests
//   keygen              server / querier key files
//   pv-run / pv-verify  one partial-view session; verdict + byte counts
//   query-run           one query-evaluation session; released answers
//   experiment ...      CSV experiment drivers + manifest replay
//   mean-query          sum/count composition into a mean
//   bench               informational local timings
//
// Every subcommand accepts `--config FILE` with flat key=value lines whose
// keys are the long option names; command-line flags override the file,
// which overrides the built-in defaults.  Failures print a single
// `error: ...` line on stderr and exit non-zero.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dataring/dataset.hpp"
#include "dataring/experiments.hpp"
#include "dataring/manifest.hpp"
#include "dataring/session.hpp"
#include "dataring/stats.hpp"

namespace {

using namespace dataring;

// Sub-seed tags for material created by the CLI itself, disjoint from the
// session stream tags so a session never re-reads the dataset draws.
constexpr std::uint64_t kCliData = 0x636c69644101;
constexpr std::uint64_t kCliBackground = 0x636c69624b01;
constexpr std::uint64_t kCliSession = 0x636c69735301;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---- dataset files ---------------------------------------------------------

void save_dataset(const HistogramDataset& ds, const std::string& path, Manifest meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  ds.save(out);
  if (!out) throw std::runtime_error("write failed: " + path);
  meta.set("type", "dataset");
  meta.set_u64("domain_size", ds.domain_size());
  meta.set_i64("n", ds.record_count());
  meta.save_file(path + ".manifest");
}

HistogramDataset load_dataset_file(const std::string& path, std::size_t* domain_out = nullptr) {
  const Manifest meta = Manifest::load_file(path + ".manifest");
  if (meta.get_or("type", "") != "dataset")
    throw std::invalid_argument("not a dataset manifest: " + path + ".manifest");
  const std::size_t domain_size = static_cast<std::size_t>(meta.get_u64("domain_size"));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  HistogramDataset ds = HistogramDataset::load(in, domain_size);
  if (domain_out) *domain_out = domain_size;
  return ds;
}

std::size_t domain_for(long n, double a) {
  if (n < 0) throw std::invalid_argument("N must be non-negative");
  if (a < 1.0) throw std::invalid_argument("domain cap a must be at least 1");
  return static_cast<std::size_t>(std::llround(std::ceil(a * static_cast<double>(n))));
}

// ---- key files ---------------------------------------------------------------

void write_keypair(const std::string& path, const EcGroup& group, const KeyPair& kp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const auto secret = kp.secret.to_bytes_be();
  const PointBytes pub = group.to_bytes(kp.pub);
  out.write(reinterpret_cast<const char*>(secret.data()),
            static_cast<std::streamsize>(secret.size()));
  out.write(reinterpret_cast<const char*>(pub.data()), static_cast<std::streamsize>(pub.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_point(const std::string& path, const EcGroup& group, const Point& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const PointBytes bytes = group.to_bytes(p);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---- shared printing ---------------------------------------------------------

void print_bytes(const Transport& tr, std::initializer_list<MsgKind> kinds) {
  for (MsgKind kind : kinds) {
    const WireSize ws = tr.bytes_by_kind(kind);
    const std::uint64_t n = tr.messages_by_kind(kind);
    if (n == 0) continue;
    std::cout << "bytes[" << msg_kind_name(kind) << "] messages=" << n
              << " payload=" << ws.payload << " framing=" << ws.framing
              << " total=" << ws.total() << "\n";
  }
  const WireSize total = tr.total_bytes();
  std::cout << "bytes[total] payload=" << total.payload << " framing=" << total.framing
            << " total=" << total.total() << "\n";
}

// ---- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  long n = 1000;
  double a = 2.0;
  std::uint64_t domain = 0;  // 0 = derive as ceil(a*N)
  std::uint64_t seed = 20260814;
  std::string out = "data.bits";
};

void cmd_gen_data(const GenDataArgs& a) {
  const std::size_t domain_size =
      a.domain ? static_cast<std::size_t>(a.domain) : domain_for(a.n, a.a);
  const HistogramDataset ds = synth_dataset(a.n, domain_size, a.seed);
  Manifest meta;
  meta.set("source", "synthetic");
  meta.set_u64("seed", a.seed);
  save_dataset(ds, a.out, std::move(meta));
  std::cout << "dataset=" << a.out << " manifest=" << a.out << ".manifest n="
            << ds.record_count() << " domain_size=" << ds.domain_size() << "\n";
}

// ---- ingest -----------------------------------------------------------------

struct IngestArgs {
  std::string in;
  long a = 2;
  std::string kinds;  // per-column: categorical | integer
  std::uint64_t seed = 20260814;
  std::string out = "data.bits";
};

void cmd_ingest(const IngestArgs& a) {
  std::ifstream fin(a.in, std::ios::binary);
  if (!fin) throw std::runtime_error("cannot open CSV: " + a.in);
  const CsvTable table = parse_csv(fin);

  std::vector<AttributeDescriptor::Kind> kinds;
  if (!a.kinds.empty()) {
    std::stringstream ss(a.kinds);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "categorical" || item == "cat")
        kinds.push_back(AttributeDescriptor::Kind::kCategorical);
      else if (item == "integer" || item == "int")
        kinds.push_back(AttributeDescriptor::Kind::kInteger);
      else
        throw std::invalid_argument("unknown column kind: " + item);
    }
  }

  const IngestResult enc = encode_rows(table, kinds);
  const Domain domain = build_domain(enc.schema, enc.rows, a.a, a.seed);
  const LoadReport report = load_dataset(enc.rows, domain);

  const std::string domain_path = a.out + ".domain";
  {
    std::ofstream out(domain_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + domain_path);
    domain.save(out);
  }
  Manifest meta;
  meta.set("source", a.in);
  meta.set("domain", domain_path);
  meta.set_i64("duplicates", report.duplicates);
  meta.set_u64("seed", a.seed);
  save_dataset(report.dataset, a.out, std::move(meta));
  std::cout << "dataset=" << a.out << " domain=" << domain_path << " n="
            << report.dataset.record_count() << " domain_size="
            << report.dataset.domain_size() << " duplicates=" << report.duplicates << "\n";
}

// ---- keygen -----------------------------------------------------------------

struct KeygenArgs {
  std::uint64_t seed = 20260814;
  std::uint64_t session_seed = 1;
  std::int64_t window = 1 << 20;
  std::string out_dir = "keys";
};

void cmd_keygen(const KeygenArgs& a) {
  std::filesystem::create_directories(a.out_dir);
  const EcGroup group;
  Rng keygen = derive_rng(a.seed, {stream::kKeygen});
  const CipherContext ctx = CipherContext::make_encrypted(group, a.window, keygen);
  Rng session_keygen = derive_rng(a.session_seed, {stream::kKeygen});
  const KeyPair querier = ctx.make_recipient_key(session_keygen);

  const std::filesystem::path dir(a.out_dir);
  write_keypair((dir / "s1.key").string(), group, ctx.s1_keys());
  write_keypair((dir / "s2.key").string(), group, ctx.s2_keys());
  write_point((dir / "collective.pub").string(), group, ctx.collective());
  write_keypair((dir / "querier.key").string(), group, querier);
  std::cout << "keys=" << a.out_dir
            << " files=s1.key,s2.key,collective.pub,querier.key"
            << " (derived from --seed " << a.seed << "; an encrypted run with the same"
            << " seed regenerates them)\n";
}

// ---- pv-run / pv-verify -------------------------------------------------------

struct PvRunArgs {
  std::string data;  // dataset bit image; empty = synthesize
  long n = 1000;
  double a = 2.0;
  long n_true = -1;  // kept true records; -1 = all of them (honest)
  long v = 100;
  long l = 0;   // 0 = l_min(N, V/N, eta)
  std::string eta = "0.05";
  long r0 = 0;  // 0 = choose_r0(N, V, L, eta)
  bool encrypted = false;
  std::int64_t window = 64;
  std::uint64_t seed = 20260814;
  std::string out_pv;
  std::string manifest;
};

struct PvSetup {
  HistogramDataset ds;
  std::vector<std::size_t> background;
  long l = 0;
  long r0 = 0;
};

PvSetup build_pv_setup(const std::string& data, long n, double a, long v, long l,
                       const std::string& eta_text, long r0, std::uint64_t seed) {
  PvSetup s;
  s.ds = data.empty() ? synth_dataset(n, domain_for(n, a), derive_seed(seed, {kCliData}))
                      : load_dataset_file(data);
  const long big_n = s.ds.record_count();
  if (v < 1 || v > big_n) throw std::invalid_argument("V must be in [1, N]");
  const stats::Rat eta = stats::rat_from_decimal(eta_text);
  s.l = l > 0 ? l : stats::l_min(big_n, static_cast<double>(v) / static_cast<double>(big_n), eta);
  s.r0 = r0 > 0 ? r0 : stats::choose_r0(big_n, v, s.l, eta);
  s.background = sample_background(s.ds, s.l, derive_seed(seed, {kCliBackground})).labels;
  return s;
}

void cmd_pv_run(const PvRunArgs& a) {
  const PvSetup setup = build_pv_setup(a.data, a.n, a.a, a.v, a.l, a.eta, a.r0, a.seed);
  const long big_n = setup.ds.record_count();
  const long n_true = a.n_true < 0 ? big_n : a.n_true;

  const EcGroup group;
  Rng keygen = derive_rng(a.seed, {stream::kKeygen});
  const CipherContext ctx = a.encrypted ? CipherContext::make_encrypted(group, a.window, keygen)
                                        : CipherContext::make_plain(a.window);
  Transport tr;
  const PvSessionResult res = run_pv_session(ctx, tr, setup.ds, n_true, a.v, setup.background,
                                             setup.r0, derive_seed(a.seed, {kCliSession}));

  std::cout << "verdict=" << (res.verdict.accept ? "ACCEPT" : "REJECT")
            << " matched=" << res.verdict.matched << " r0=" << setup.r0 << " l=" << setup.l
            << " n_true=" << n_true << " n=" << big_n;
  if (!res.verdict.cause.empty()) std::cout << " cause=\"" << res.verdict.cause << "\"";
  std::cout << "\n";
  print_bytes(tr, {MsgKind::kLbs, MsgKind::kSigmaInv, MsgKind::kEncLbs});

  if (!a.out_pv.empty()) {
    if (!res.pv || res.pv->empty()) throw std::runtime_error("no partial view to store");
    std::string blob;
    blob.reserve(res.pv->size() * kCiphertextBytes);
    for (const Slot& slot : *res.pv) {
      const CiphertextBytes bytes = ctx.serialize(slot);
      blob.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }
    write_file(a.out_pv, blob);
    std::cout << "pv=" << a.out_pv << " entries=" << res.pv->size() << "\n";
  }
  if (!a.manifest.empty()) {
    Manifest m;
    m.set("type", "pv-run");
    m.set("data", a.data);
    m.set_i64("n", a.data.empty() ? a.n : big_n);
    m.set_double("a", a.a);
    m.set_i64("n-true", n_true);
    m.set_i64("v", a.v);
    m.set_i64("l", setup.l);
    m.set("eta", a.eta);
    m.set_i64("r0", setup.r0);
    m.set_u64("encrypted", a.encrypted ? 1 : 0);
    m.set_i64("window", a.window);
    m.set_u64("seed", a.seed);
    if (!a.out_pv.empty()) m.set("pv", a.out_pv);
    m.set("verdict", res.verdict.accept ? "ACCEPT" : "REJECT");
    m.save_file(a.manifest);
  }
}

struct PvVerifyArgs {
  std::string manifest;
  std::string pv;  // override for the manifest's pv path
  long r0 = 0;     // override; 0 = manifest's r0
};

void cmd_pv_verify(const PvVerifyArgs& a) {
  const Manifest m = Manifest::load_file(a.manifest);
  if (m.get_or("type", "") != "pv-run")
    throw std::invalid_argument("not a pv-run manifest: " + a.manifest);
  const std::uint64_t seed = m.get_u64("seed");
  const PvSetup setup = build_pv_setup(m.get_or("data", ""), m.get_i64("n"), m.get_double("a"),
                                       m.get_i64("v"), m.get_i64("l"), m.get("eta"),
                                       m.get_i64("r0"), seed);
  const long r0 = a.r0 > 0 ? a.r0 : setup.r0;

  const std::string pv_path = a.pv.empty() ? m.get("pv") : a.pv;
  std::ifstream in(pv_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open partial view: " + pv_path);
  std::vector<Slot> slots;
  CiphertextBytes bytes;

  const EcGroup group;
  Rng keygen = derive_rng(seed, {stream::kKeygen});
  const CipherContext ctx = m.get_u64("encrypted") != 0
                                ? CipherContext::make_encrypted(group, m.get_i64("window"), keygen)
                                : CipherContext::make_plain(m.get_i64("window"));
  while (in.read(reinterpret_cast<char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size())))
    slots.push_back(ctx.deserialize(bytes));
  if (in.gcount() != 0) throw std::invalid_argument("partial view file is not a whole number of ciphertexts");
  if (slots.size() != setup.ds.domain_size())
    throw std::invalid_argument("partial view length does not match the domain");

  const PvVerdict verdict = verify_pv(ctx, slots, setup.background, r0);
  std::cout << "verdict=" << (verdict.accept ? "ACCEPT" : "REJECT")
            << " matched=" << verdict.matched << " r0=" << r0;
  if (!verdict.cause.empty()) std::cout << " cause=\"" << verdict.cause << "\"";
  std::cout << "\n";
}

// ---- query-run ----------------------------------------------------------------

struct QueryRunArgs {
  ProtocolShape shape;
  std::string strategy = "honest";
  double p_c = 0.0;
  int x = -1;  // -1 = not forced
  bool encrypted = false;
  std::uint64_t seed = 20260814;
  std::uint64_t session_seed = 1;
  std::string manifest;
};

void cmd_query_run(const QueryRunArgs& a) {
  const EcGroup group;
  Rng keygen = derive_rng(a.seed, {stream::kKeygen});
  const CipherContext ctx = a.encrypted
                                ? CipherContext::make_encrypted(group, a.shape.window, keygen)
                                : CipherContext::make_plain(a.shape.window);
  const ProtocolFixture fx = build_protocol_fixture(ctx, a.shape, a.seed);

  CheatStrategy strat = parse_strategy(a.strategy);
  strat.p_c = a.p_c;
  if (a.x >= 0) strat.forced_x = a.x;

  Transport tr;
  const QuerySessionResult res =
      run_query_session(ctx, tr, fx.assets, fx.params, strat, a.session_seed);

  std::cout << "strategy=" << a.strategy << " cheated=" << (res.cheated ? 1 : 0)
            << " flagged=" << (res.flagged ? 1 : 0) << " released=" << (res.released ? 1 : 0)
            << " x_used=" << res.x_used << " tests_cheated=" << res.tests_cheated
            << " tests_failed=" << res.tests_failed << " answers_given=" << res.answers_given
            << "\n";
  std::cout << "l=" << fx.l << " r0=" << fx.r0 << " domain_size=" << fx.domain_size << "\n";
  for (std::size_t i = 0; i < res.querier_values.size(); ++i) {
    std::cout << "released[" << i << "]=";
    if (res.querier_values[i])
      std::cout << *res.querier_values[i];
    else
      std::cout << "overflow";
    std::cout << "\n";
  }
  print_bytes(tr, {MsgKind::kQuery, MsgKind::kAnswer, MsgKind::kRelease});

  if (!a.manifest.empty()) {
    Manifest m;
    m.set("type", "query-run");
    m.set_i64("n", a.shape.n);
    m.set_double("a", a.shape.a);
    m.set_i64("v", a.shape.v);
    m.set_i64("l", a.shape.l);
    m.set("eta", a.shape.eta);
    m.set_i64("m_q", a.shape.m_q);
    m.set_i64("m_t", a.shape.m_t);
    m.set_double("eps", a.shape.eps);
    m.set_double("eps_s", a.shape.eps_s);
    m.set_double("delta_t", a.shape.delta_t);
    m.set_double("tail", a.shape.tail);
    m.set("rule", a.shape.rule);
    m.set("tolerance", a.shape.tolerance);
    m.set_i64("wide_trials", a.shape.wide_trials);
    m.set("battery", a.shape.battery);
    m.set_i64("window", a.shape.window);
    m.set("strategy", a.strategy);
    m.set_double("p_c", a.p_c);
    m.set_i64("x", a.x);
    m.set_u64("encrypted", a.encrypted ? 1 : 0);
    m.set_u64("seed", a.seed);
    m.set_u64("session_seed", a.session_seed);
    m.save_file(a.manifest);
  }
}

// ---- mean-query -----------------------------------------------------------------

struct MeanQueryArgs {
  long n = 1000;
  double a = 2.0;
  int buckets = 5;
  std::string values;  // per-bucket attribute values; empty = 1..K
  double eps = 0.5;
  double delta_t = 1.0;
  bool encrypted = false;
  std::int64_t window = 1 << 20;
  std::uint64_t seed = 20260814;
};

void cmd_mean_query(const MeanQueryArgs& a) {
  if (a.buckets < 1) throw std::invalid_argument("bucket count must be at least 1");
  const std::size_t domain_size = domain_for(a.n, a.a);
  if (domain_size < static_cast<std::size_t>(a.buckets))
    throw std::invalid_argument("domain smaller than the bucket count");
  const HistogramDataset ds = synth_dataset(a.n, domain_size, derive_seed(a.seed, {kCliData}));

  std::vector<double> values;
  if (a.values.empty()) {
    for (int k = 1; k <= a.buckets; ++k) values.push_back(k);
  } else {
    values = parse_double_list(a.values);
    if (values.size() != static_cast<std::size_t>(a.buckets))
      throw std::invalid_argument("need exactly one value per bucket");
  }

  const EcGroup group;
  Rng keygen = derive_rng(a.seed, {stream::kKeygen});
  const CipherContext ctx = a.encrypted
                                ? CipherContext::make_encrypted(group, a.window, keygen)
                                : CipherContext::make_plain(a.window);
  Rng querier_rng = derive_rng(a.seed, {stream::kKeygen, 1});
  const KeyPair querier = ctx.make_recipient_key(querier_rng);

  // The attribute is the bucket index: contiguous equal ranges of the domain.
  const auto bucket_of = [&](std::size_t label) {
    return static_cast<int>((static_cast<unsigned long long>(label) *
                             static_cast<unsigned long long>(a.buckets)) /
                            domain_size);
  };

  PrivacyBudget budget;
  budget.eps = a.eps;
  budget.eps_s = a.eps;
  budget.delta_t = a.delta_t;
  budget.m_q = a.buckets + 1;  // per-bucket counts plus the total count
  budget.m_t = 0;
  budget.validate();

  Rng nonce = derive_rng(a.seed, {stream::kNonce});
  Rng noise = derive_rng(a.seed, {stream::kNoise});
  const std::vector<std::size_t> support = ds.set_labels();

  std::vector<Slot> answers;
  for (int k = 0; k <= a.buckets; ++k) {
    std::vector<std::size_t> labels;
    for (std::size_t label = 0; label < domain_size; ++label)
      if (k == a.buckets || bucket_of(label) == k) labels.push_back(label);
    const EncryptedQuery eq = encrypt_query(ctx, encode_query(labels, domain_size), nonce);
    answers.push_back(answer_query(ctx, support, eq, budget, noise, nonce));
  }

  Rng s1_nonce = derive_rng(a.seed, {stream::kNonce, 3});
  Rng s2_nonce = derive_rng(a.seed, {stream::kNonce, 4});
  const auto released = release_answers(ctx, answers, querier.pub, true, s1_nonce, s2_nonce);
  if (!released) throw std::runtime_error("release failed");

  double sum = 0;
  std::vector<long> true_counts(static_cast<std::size_t>(a.buckets), 0);
  for (std::size_t label : support) ++true_counts[static_cast<std::size_t>(bucket_of(label))];
  double true_sum = 0;
  for (int k = 0; k < a.buckets; ++k)
    true_sum += values[static_cast<std::size_t>(k)] * true_counts[static_cast<std::size_t>(k)];

  std::int64_t total = 0;
  for (int k = 0; k <= a.buckets; ++k) {
    const auto decoded = ctx.recipient_decrypt(querier, (*released)[static_cast<std::size_t>(k)]);
    if (!decoded) throw std::runtime_error("released answer exceeded the decode window");
    if (k < a.buckets) {
      std::cout << "bucket[" << k << "] value=" << fmt(values[static_cast<std::size_t>(k)])
                << " count=" << *decoded
                << " true_count=" << true_counts[static_cast<std::size_t>(k)] << "\n";
      sum += values[static_cast<std::size_t>(k)] * static_cast<double>(*decoded);
    } else {
      total = *decoded;
      std::cout << "count=" << total << " true_count=" << ds.record_count() << "\n";
    }
  }
  const double mean = total != 0 ? sum / static_cast<double>(total)
                                 : std::numeric_limits<double>::quiet_NaN();
  const double true_mean = ds.record_count() > 0
                               ? true_sum / static_cast<double>(ds.record_count())
                               : std::numeric_limits<double>::quiet_NaN();
  std::cout << "sum=" << fmt(sum) << " mean=" << fmt(mean) << " true_mean=" << fmt(true_mean)
            << " noise_scale=" << fmt(budget.scale()) << " budget_consumed=" << budget.consumed
            << "/" << budget.total() << "\n";
}

// ---- bench -------------------------------------------------------------------

struct BenchArgs {
  long reps = 2000;
  std::int64_t window = 1 << 16;
  long n = 1000;
  double a = 2.0;
  std::uint64_t seed = 1;
};

void cmd_bench(const BenchArgs& a) {
  using clock = std::chrono::steady_clock;
  const auto report = [&](const char* name, long reps, clock::duration d) {
    const double us =
        std::chrono::duration_cast<std::chrono::duration<double, std::micro>>(d).count();
    std::cout << "bench[" << name << "] reps=" << reps << " total_ms=" << fmt(us / 1000.0)
              << " per_op_us=" << fmt(us / static_cast<double>(reps)) << "\n";
  };

  const EcGroup group;
  Rng keygen = derive_rng(a.seed, {stream::kKeygen});
  const CipherContext ctx = CipherContext::make_encrypted(group, a.window, keygen);
  Rng nonce = derive_rng(a.seed, {stream::kNonce});

  std::vector<Slot> cts;
  cts.reserve(static_cast<std::size_t>(a.reps));
  auto t0 = clock::now();
  for (long i = 0; i < a.reps; ++i) cts.push_back(ctx.encrypt(i % 97, nonce));
  report("encrypt", a.reps, clock::now() - t0);

  t0 = clock::now();
  Slot acc = cts[0];
  for (long i = 1; i < a.reps; ++i) acc = ctx.add(acc, cts[static_cast<std::size_t>(i)]);
  report("add", a.reps - 1, clock::now() - t0);

  t0 = clock::now();
  for (long i = 0; i < a.reps; ++i)
    cts[static_cast<std::size_t>(i)] = ctx.rerandomize(cts[static_cast<std::size_t>(i)], nonce);
  report("rerandomize", a.reps, clock::now() - t0);

  const long dec_reps = std::min(a.reps, 200L);
  t0 = clock::now();
  for (long i = 0; i < dec_reps; ++i)
    if (!ctx.joint_decrypt(cts[static_cast<std::size_t>(i)]))
      throw std::runtime_error("decode failed in bench");
  report("joint_decrypt", dec_reps, clock::now() - t0);

  Rng qk = derive_rng(a.seed, {stream::kKeygen, 1});
  const KeyPair target = ctx.make_recipient_key(qk);
  Rng s1 = derive_rng(a.seed, {stream::kNonce, 3});
  Rng s2 = derive_rng(a.seed, {stream::kNonce, 4});
  t0 = clock::now();
  for (long i = 0; i < dec_reps; ++i)
    cts[static_cast<std::size_t>(i)] =
        ctx.reencrypt(cts[static_cast<std::size_t>(i)], target.pub, s1, s2);
  report("reencrypt", dec_reps, clock::now() - t0);

  // One noisy count query, encrypted vs plain, at the configured scale.
  const std::size_t domain_size = domain_for(a.n, a.a);
  const HistogramDataset ds = synth_dataset(a.n, domain_size, derive_seed(a.seed, {kCliData}));
  const std::vector<std::size_t> support = ds.set_labels();
  std::vector<std::size_t> all(domain_size);
  for (std::size_t i = 0; i < domain_size; ++i) all[i] = i;
  PrivacyBudget budget;
  budget.m_q = 10;
  budget.m_t = 0;

  t0 = clock::now();
  const EncryptedQuery eq = encrypt_query(ctx, encode_query(all, domain_size), nonce);
  report("encrypt_query(aN slots)", 1, clock::now() - t0);
  Rng noise = derive_rng(a.seed, {stream::kNoise});
  t0 = clock::now();
  (void)answer_query(ctx, support, eq, budget, noise, nonce);
  report("answer_query(encrypted)", 1, clock::now() - t0);

  const CipherContext plain = CipherContext::make_plain(a.window);
  Rng pn = derive_rng(a.seed, {stream::kNonce, 9});
  const EncryptedQuery pq = encrypt_query(plain, encode_query(all, domain_size), pn);
  PrivacyBudget pbudget;
  pbudget.m_q = 10;
  pbudget.m_t = 0;
  Rng pnoise = derive_rng(a.seed, {stream::kNoise});
  t0 = clock::now();
  (void)answer_query(plain, support, pq, pbudget, pnoise, pn);
  report("answer_query(plain)", 1, clock::now() - t0);
}

// ---- experiment group -----------------------------------------------------------

void emit_experiment(const std::string& csv, const std::string& out,
                     const std::string& manifest_path, Manifest m) {
  std::cout << csv;
  if (!out.empty()) {
    write_file(out, csv);
    m.set("csv", out);
  }
  if (!manifest_path.empty()) m.save_file(manifest_path);
}

void add_shape_options(CLI::App* cmd, ProtocolShape& s) {
  cmd->add_option("--n", s.n, "participant dataset size N");
  cmd->add_option("--a", s.a, "domain cap factor a, |domain| = ceil(a*N)");
  cmd->add_option("--v", s.v, "partial-view sample size V");
  cmd->add_option("--l", s.l, "background-knowledge size L (0 = minimum viable size)");
  cmd->add_option("--eta", s.eta, "false-rejection budget eta");
  cmd->add_option("--m-q", s.m_q, "real queries per session");
  cmd->add_option("--m-t", s.m_t, "hidden tests per session (m_t <= m_q)");
  cmd->add_option("--eps", s.eps, "per-participant privacy budget epsilon");
  cmd->add_option("--eps-s", s.eps_s, "server privacy budget epsilon_S");
  cmd->add_option("--delta-t", s.delta_t, "count-query sensitivity Delta_T");
  cmd->add_option("--tail", s.tail, "per-test noise tail probability");
  cmd->add_option("--rule", s.rule, "noise-scale rule: per-budget | combined");
  cmd->add_option("--tolerance", s.tolerance, "test tolerance: strict | wide");
  cmd->add_option("--wide-trials", s.wide_trials,
                  "session count the wide tolerance unions over");
  cmd->add_option("--battery", s.battery,
                  "test battery: default | all-l | all-v | all-n | nL,nV,nN");
  cmd->add_option("--window", s.window, "decode window W (plaintexts in [-W, W])");
}

// ---- config file support ----------------------------------------------------

// Flat key=value config: keys are long option names.  The file's settings are
// injected as `--key=value` tokens ahead of the explicit flags, and every
// option takes the last occurrence, so flags > file > defaults.
std::vector<std::string> inject_config(const std::vector<std::string>& args) {
  std::string cfg;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      cfg = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      cfg = args[i].substr(9);
  }
  if (cfg.empty()) return args;

  const Manifest m = Manifest::load_file(cfg);
  std::vector<std::string> tokens;
  for (const auto& [key, value] : m.entries()) tokens.push_back("--" + key + "=" + value);

  std::size_t insert_at = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!args[i].empty() && args[i][0] == '-') {
      insert_at = i;
      break;
    }
  }
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(insert_at));
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(insert_at), args.end());
  return out;
}

void take_last_everywhere(CLI::App* app) {
  for (CLI::Option* opt : app->get_options()) {
    if (opt->get_positional()) continue;
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
  for (CLI::App* sub : app->get_subcommands([](const CLI::App*) { return true; }))
    take_last_everywhere(sub);
}

void add_config_option(CLI::App* cmd) {
  cmd->add_option("--config",
                  "flat key=value file of long option names; flags override it")
      ->expected(1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dataring: verifiable private data sharing - data tooling, protocol runs, "
               "and experiment drivers"};
  app.option_defaults()->always_capture_default(true);
  app.require_subcommand(1);

  // gen-data
  GenDataArgs gen;
  CLI::App* c_gen = app.add_subcommand("gen-data", "synthesize a dataset bit image");
  c_gen->add_option("--n", gen.n, "dataset size N (evaluation default 500000)");
  c_gen->add_option("--a", gen.a, "domain cap factor a");
  c_gen->add_option("--domain", gen.domain, "explicit domain size (overrides a*N)");
  c_gen->add_option("--seed", gen.seed, "sampling seed");
  c_gen->add_option("--out", gen.out, "output bit-image path");
  add_config_option(c_gen);
  c_gen->callback([&] { cmd_gen_data(gen); });

  // ingest
  IngestArgs ing;
  CLI::App* c_ing = app.add_subcommand("ingest", "ingest a CSV into a capped domain + bit image");
  c_ing->add_option("--in", ing.in, "input CSV with a header row")->required();
  c_ing->add_option("--a", ing.a, "domain cap factor a (integer)");
  c_ing->add_option("--kinds", ing.kinds, "per-column kinds: categorical|integer, comma list");
  c_ing->add_option("--seed", ing.seed, "filler-label sampling seed");
  c_ing->add_option("--out", ing.out, "output bit-image path");
  add_config_option(c_ing);
  c_ing->callback([&] { cmd_ingest(ing); });

  // keygen
  KeygenArgs keys;
  CLI::App* c_keys = app.add_subcommand("keygen", "write server and querier key files");
  c_keys->add_option("--seed", keys.seed, "master seed the server keys derive from");
  c_keys->add_option("--session-seed", keys.session_seed, "session seed for the querier key");
  c_keys->add_option("--window", keys.window, "decode window recorded with the keys");
  c_keys->add_option("--out-dir", keys.out_dir, "output directory");
  add_config_option(c_keys);
  c_keys->callback([&] { cmd_keygen(keys); });

  // pv-run
  PvRunArgs pvr;
  CLI::App* c_pvr = app.add_subcommand("pv-run", "run one partial-view collection + verification");
  c_pvr->add_option("--data", pvr.data, "dataset bit image (default: synthesize)");
  c_pvr->add_option("--n", pvr.n, "synthetic dataset size N (evaluation default 500000)");
  c_pvr->add_option("--a", pvr.a, "domain cap factor a");
  c_pvr->add_option("--n-true", pvr.n_true,
                    "true records the participant keeps; rest are fakes (-1 = all, 0 = none)");
  c_pvr->add_option("--v", pvr.v, "partial-view sample size V (evaluation default 5000)");
  c_pvr->add_option("--l", pvr.l, "background size L (0 = minimum viable; evaluation default 500)");
  c_pvr->add_option("--eta", pvr.eta, "false-rejection budget eta");
  c_pvr->add_option("--r0", pvr.r0, "acceptance threshold r0 (0 = largest with tail >= 1-eta)");
  c_pvr->add_flag("--encrypted", pvr.encrypted, "use the EC-ElGamal backend");
  c_pvr->add_option("--window", pvr.window, "decode window");
  c_pvr->add_option("--seed", pvr.seed, "master seed");
  c_pvr->add_option("--out-pv", pvr.out_pv, "store the collected view (66 bytes/entry)");
  c_pvr->add_option("--manifest", pvr.manifest, "write a run manifest for pv-verify");
  add_config_option(c_pvr);
  c_pvr->callback([&] { cmd_pv_run(pvr); });

  // pv-verify
  PvVerifyArgs pvv;
  CLI::App* c_pvv = app.add_subcommand("pv-verify", "re-verify a stored partial view");
  c_pvv->add_option("--manifest", pvv.manifest, "manifest written by pv-run")->required();
  c_pvv->add_option("--pv", pvv.pv, "partial-view file (default: the manifest's)");
  c_pvv->add_option("--r0", pvv.r0, "threshold override (0 = the manifest's)");
  add_config_option(c_pvv);
  c_pvv->callback([&] { cmd_pv_verify(pvv); });

  // query-run
  QueryRunArgs qr;
  CLI::App* c_qr = app.add_subcommand("query-run", "run one query-evaluation session");
  add_shape_options(c_qr, qr.shape);
  c_qr->add_option("--strategy", qr.strategy, "honest | modify:<alpha> | add:<omega>");
  c_qr->add_option("--p-c", qr.p_c, "per-query cheat probability (iid mode)");
  c_qr->add_option("--x", qr.x, "force exactly x incorrect answers (-1 = iid mode)");
  c_qr->add_flag("--encrypted", qr.encrypted, "use the EC-ElGamal backend");
  c_qr->add_option("--seed", qr.seed, "fixture seed (dataset, background, partial view)");
  c_qr->add_option("--session-seed", qr.session_seed, "per-session seed");
  c_qr->add_option("--manifest", qr.manifest, "write a run manifest");
  add_config_option(c_qr);
  c_qr->callback([&] { cmd_query_run(qr); });

  // mean-query
  MeanQueryArgs mq;
  CLI::App* c_mq = app.add_subcommand(
      "mean-query", "compose per-bucket counts and a count into a mean");
  c_mq->add_option("--n", mq.n, "dataset size N");
  c_mq->add_option("--a", mq.a, "domain cap factor a");
  c_mq->add_option("--buckets", mq.buckets, "attribute buckets partitioning the domain");
  c_mq->add_option("--values", mq.values, "per-bucket attribute values (default 1..K)");
  c_mq->add_option("--eps", mq.eps, "privacy budget epsilon");
  c_mq->add_option("--delta-t", mq.delta_t, "count sensitivity");
  c_mq->add_flag("--encrypted", mq.encrypted, "use the EC-ElGamal backend");
  c_mq->add_option("--window", mq.window, "decode window");
  c_mq->add_option("--seed", mq.seed, "master seed");
  add_config_option(c_mq);
  c_mq->callback([&] { cmd_mean_query(mq); });

  // bench
  BenchArgs bench;
  CLI::App* c_bench = app.add_subcommand(
      "bench", "informational local timings (not acceptance targets)");
  c_bench->add_option("--reps", bench.reps, "group-operation repetitions");
  c_bench->add_option("--window", bench.window, "decode window for the decrypt timing");
  c_bench->add_option("--n", bench.n, "dataset size for the query timing");
  c_bench->add_option("--a", bench.a, "domain cap factor a");
  c_bench->add_option("--seed", bench.seed, "seed");
  add_config_option(c_bench);
  c_bench->callback([&] { cmd_bench(bench); });

  // experiment group
  CLI::App* c_exp = app.add_subcommand("experiment", "CSV experiment drivers");
  c_exp->require_subcommand(1);

  PvThresholdParams ep_pv;
  std::string pv_out, pv_manifest;
  CLI::App* e_pv = c_exp->add_subcommand(
      "pv-threshold", "partial-view accept rate vs kept true records");
  e_pv->add_option("--n", ep_pv.n, "dataset size N");
  e_pv->add_option("--a", ep_pv.a, "domain cap factor a");
  e_pv->add_option("--v", ep_pv.v, "partial-view sample size V");
  e_pv->add_option("--l", ep_pv.l, "background size L (0 = minimum viable)");
  e_pv->add_option("--eta", ep_pv.eta, "false-rejection budget eta");
  e_pv->add_option("--r0", ep_pv.r0, "threshold r0 (0 = largest with tail >= 1-eta)");
  e_pv->add_option("--trials", ep_pv.trials, "sessions per grid point");
  e_pv->add_option("--n-grid", ep_pv.n_grid, "kept-true-record grid (default 0,N/4,N/2,3N/4,N)");
  e_pv->add_flag("--encrypted", ep_pv.encrypted, "use the EC-ElGamal backend");
  e_pv->add_option("--seed", ep_pv.seed, "master seed");
  e_pv->add_option("--workers", ep_pv.workers, "trial shards (output is worker-invariant)");
  e_pv->add_option("--out", pv_out, "also write the CSV here");
  e_pv->add_option("--manifest", pv_manifest, "write the replayable run manifest here");
  add_config_option(e_pv);
  e_pv->callback([&] {
    emit_experiment(run_pv_threshold(ep_pv), pv_out, pv_manifest, to_manifest(ep_pv));
  });

  LminParams ep_lmin;
  std::string lmin_out, lmin_manifest;
  CLI::App* e_lmin = c_exp->add_subcommand("lmin", "minimum background size over an N grid");
  e_lmin->add_option("--eta", ep_lmin.eta, "false-rejection budget eta");
  e_lmin->add_option("--rho", ep_lmin.rho, "view fraction rho = V/N");
  e_lmin->add_option("--n-grid", ep_lmin.n_grid, "N grid");
  e_lmin->add_option("--out", lmin_out, "also write the CSV here");
  e_lmin->add_option("--manifest", lmin_manifest, "write the replayable run manifest here");
  add_config_option(e_lmin);
  e_lmin->callback([&] {
    emit_experiment(run_lmin(ep_lmin), lmin_out, lmin_manifest, to_manifest(ep_lmin));
  });

  NminTableParams ep_nmin;
  std::string nmin_out, nmin_manifest;
  CLI::App* e_nmin = c_exp->add_subcommand(
      "nmin-table", "adversary minima v_opt / n_min over a theta grid");
  e_nmin->add_option("--n", ep_nmin.n, "dataset size N");
  e_nmin->add_option("--v", ep_nmin.v, "partial-view sample size V");
  e_nmin->add_option("--l", ep_nmin.l, "background size L");
  e_nmin->add_option("--eta", ep_nmin.eta, "false-rejection budget eta");
  e_nmin->add_option("--thetas", ep_nmin.thetas, "detection-target grid");
  e_nmin->add_option("--out", nmin_out, "also write the CSV here");
  e_nmin->add_option("--manifest", nmin_manifest, "write the replayable run manifest here");
  add_config_option(e_nmin);
  e_nmin->callback([&] {
    emit_experiment(run_nmin_table(ep_nmin), nmin_out, nmin_manifest, to_manifest(ep_nmin));
  });

  DetectionParams ep_det;
  std::string det_out, det_manifest;
  CLI::App* e_det = c_exp->add_subcommand(
      "detection", "cheating-detection curves over forced incorrect-answer counts");
  add_shape_options(e_det, ep_det.shape);
  e_det->add_option("--strategies", ep_det.strategies, "comma list: honest|modify:a|add:w");
  e_det->add_option("--x-values", ep_det.x_values, "forced incorrect-answer counts (default 1..m)");
  e_det->add_option("--trials", ep_det.trials, "sessions per (strategy, x)");
  e_det->add_flag("--full-protocol", ep_det.full_protocol,
                  "drive complete sessions instead of the fast evaluator");
  e_det->add_flag("--encrypted", ep_det.encrypted,
                  "EC-ElGamal backend (with --full-protocol)");
  e_det->add_option("--seed", ep_det.seed, "master seed");
  e_det->add_option("--workers", ep_det.workers, "trial shards (output is worker-invariant)");
  e_det->add_option("--out", det_out, "also write the CSV here");
  e_det->add_option("--manifest", det_manifest, "write the replayable run manifest here");
  add_config_option(e_det);
  e_det->callback([&] {
    emit_experiment(run_detection(ep_det), det_out, det_manifest, to_manifest(ep_det));
  });

  Eq6Params ep_eq6;
  std::string eq6_out, eq6_manifest;
  CLI::App* e_eq6 = c_exp->add_subcommand(
      "eq6-check", "Monte-Carlo detection vs the closed forms, with the model gap");
  add_shape_options(e_eq6, ep_eq6.shape);
  e_eq6->add_option("--strategies", ep_eq6.strategies,
                    "comma list of cheating strategies to measure p_d for");
  e_eq6->add_option("--p-c-grid", ep_eq6.p_c_grid, "per-query cheat probability grid");
  e_eq6->add_option("--pd-trials", ep_eq6.pd_trials, "full sessions per strategy to measure p_d");
  e_eq6->add_option("--mc-trials", ep_eq6.mc_trials, "Monte-Carlo trials per model and row");
  e_eq6->add_option("--seed", ep_eq6.seed, "master seed");
  e_eq6->add_option("--workers", ep_eq6.workers, "p_d session shards (output is worker-invariant)");
  e_eq6->add_option("--out", eq6_out, "also write the CSV here");
  e_eq6->add_option("--manifest", eq6_manifest, "write the replayable run manifest here");
  add_config_option(e_eq6);
  e_eq6->callback([&] {
    emit_experiment(run_eq6(ep_eq6), eq6_out, eq6_manifest, to_manifest(ep_eq6));
  });

  std::string replay_manifest, replay_out;
  CLI::App* e_replay = c_exp->add_subcommand(
      "replay", "re-run an experiment from its manifest (byte-identical CSV)");
  e_replay->add_option("--manifest", replay_manifest, "manifest to replay")->required();
  e_replay->add_option("--out", replay_out, "CSV destination (default: the manifest's)");
  add_config_option(e_replay);
  e_replay->callback([&] {
    const Manifest m = Manifest::load_file(replay_manifest);
    const ExperimentRun run = run_from_manifest(m);
    std::cout << run.csv;
    const std::string out = replay_out.empty() ? m.get_or("csv", "") : replay_out;
    if (!out.empty()) write_file(out, run.csv);
  });

  take_last_everywhere(&app);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = inject_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
