// Informational micro-benchmarks: group/cipher operations, query answering,
// and whole protocol sessions at desk scale.  None of these numbers are
// correctness targets; they exist to catch order-of-magnitude regressions.

#include <benchmark/benchmark.h>

#include <optional>
#include <vector>

#include "dataring/dataset.hpp"
#include "dataring/experiments.hpp"
#include "dataring/session.hpp"
#include "dataring/stats.hpp"

namespace {

using namespace dataring;

constexpr std::int64_t kWindow = 1 << 16;

struct CipherFixture {
  EcGroup group;
  CipherContext ctx;
  Rng nonce;

  CipherFixture()
      : ctx([&] {
          Rng keygen = derive_rng(1, {stream::kKeygen});
          return CipherContext::make_encrypted(group, kWindow, keygen);
        }()),
        nonce(derive_rng(1, {stream::kNonce})) {}
};

CipherFixture& fixture() {
  static CipherFixture fx;
  return fx;
}

void BM_Encrypt(benchmark::State& state) {
  auto& fx = fixture();
  std::int64_t v = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx.ctx.encrypt(v++ % 97, fx.nonce));
  }
}
BENCHMARK(BM_Encrypt);

void BM_Add(benchmark::State& state) {
  auto& fx = fixture();
  const Slot a = fx.ctx.encrypt(7, fx.nonce);
  const Slot b = fx.ctx.encrypt(35, fx.nonce);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx.ctx.add(a, b));
  }
}
BENCHMARK(BM_Add);

void BM_Rerandomize(benchmark::State& state) {
  auto& fx = fixture();
  const Slot a = fx.ctx.encrypt(7, fx.nonce);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx.ctx.rerandomize(a, fx.nonce));
  }
}
BENCHMARK(BM_Rerandomize);

void BM_JointDecrypt(benchmark::State& state) {
  auto& fx = fixture();
  const Slot a = fx.ctx.encrypt(state.range(0), fx.nonce);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx.ctx.joint_decrypt(a));
  }
}
BENCHMARK(BM_JointDecrypt)->Arg(5)->Arg(5000)->Arg(50000);

void BM_Reencrypt(benchmark::State& state) {
  auto& fx = fixture();
  Rng qk = derive_rng(1, {stream::kKeygen, 1});
  const KeyPair querier = fx.ctx.make_recipient_key(qk);
  const Slot a = fx.ctx.encrypt(7, fx.nonce);
  Rng s1 = derive_rng(1, {stream::kNonce, 3});
  Rng s2 = derive_rng(1, {stream::kNonce, 4});
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx.ctx.reencrypt(a, querier.pub, s1, s2));
  }
}
BENCHMARK(BM_Reencrypt);

void BM_SerializeRoundTrip(benchmark::State& state) {
  auto& fx = fixture();
  const Slot a = fx.ctx.encrypt(7, fx.nonce);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx.ctx.deserialize(fx.ctx.serialize(a)));
  }
}
BENCHMARK(BM_SerializeRoundTrip);

void BM_AnswerQuery(benchmark::State& state) {
  const bool encrypted = state.range(0) != 0;
  const std::size_t domain_size = static_cast<std::size_t>(state.range(1));
  const EcGroup group;
  Rng keygen = derive_rng(1, {stream::kKeygen});
  const CipherContext ctx = encrypted ? CipherContext::make_encrypted(group, kWindow, keygen)
                                      : CipherContext::make_plain(kWindow);
  const HistogramDataset ds = synth_dataset(static_cast<long>(domain_size / 2), domain_size, 3);
  const std::vector<std::size_t> support = ds.set_labels();
  std::vector<std::size_t> all(domain_size);
  for (std::size_t i = 0; i < domain_size; ++i) all[i] = i;
  Rng nonce = derive_rng(1, {stream::kNonce});
  const EncryptedQuery eq = encrypt_query(ctx, encode_query(all, domain_size), nonce);
  Rng noise = derive_rng(1, {stream::kNoise});
  for (auto _ : state) {
    PrivacyBudget budget;  // fresh so it never exhausts
    benchmark::DoNotOptimize(answer_query(ctx, support, eq, budget, noise, nonce));
  }
  state.SetLabel(encrypted ? "encrypted" : "plain");
}
BENCHMARK(BM_AnswerQuery)->Args({0, 2000})->Args({1, 2000});

void BM_PvSession(benchmark::State& state) {
  const bool encrypted = state.range(0) != 0;
  const EcGroup group;
  Rng keygen = derive_rng(1, {stream::kKeygen});
  const CipherContext ctx = encrypted ? CipherContext::make_encrypted(group, 64, keygen)
                                      : CipherContext::make_plain(64);
  const HistogramDataset ds = synth_dataset(200, 400, 3);
  const auto background = sample_background(ds, 20, 5).labels;
  Transport tr;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_pv_session(ctx, tr, ds, 200, 40, background, 1, seed++));
  }
  state.SetLabel(encrypted ? "encrypted N=200" : "plain N=200");
}
BENCHMARK(BM_PvSession)->Arg(0)->Arg(1);

void BM_QuerySession(benchmark::State& state) {
  const bool encrypted = state.range(0) != 0;
  const EcGroup group;
  Rng keygen = derive_rng(1, {stream::kKeygen});
  const CipherContext ctx = encrypted
                                ? CipherContext::make_encrypted(group, 1 << 20, keygen)
                                : CipherContext::make_plain(1 << 20);
  ProtocolShape shape;
  shape.n = 500;
  shape.v = 40;
  shape.m_q = 4;
  shape.m_t = 2;
  shape.battery = "1,1,0";
  const ProtocolFixture fx = build_protocol_fixture(ctx, shape, 7);
  CheatStrategy honest;
  Transport tr;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_query_session(ctx, tr, fx.assets, fx.params, honest, seed++));
  }
  state.SetLabel(encrypted ? "encrypted N=500 m=6" : "plain N=500 m=6");
}
BENCHMARK(BM_QuerySession)->Arg(0)->Arg(1);

void BM_HyperTail(benchmark::State& state) {
  const long n = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stats::hyper_tail(n, n / 100, n / 1000, 2));
  }
}
BENCHMARK(BM_HyperTail)->Arg(10000)->Arg(500000);

void BM_ChooseR0(benchmark::State& state) {
  const long n = state.range(0);
  const auto eta = stats::rat_from_decimal("0.05");
  for (auto _ : state) {
    benchmark::DoNotOptimize(stats::choose_r0(n, n / 100, n / 1000, eta));
  }
}
BENCHMARK(BM_ChooseR0)->Arg(10000)->Arg(500000);

}  // namespace

BENCHMARK_MAIN();
