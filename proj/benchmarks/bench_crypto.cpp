#include <benchmark/benchmark.h>

#include "distvote/crypto/ballot_proof.hpp"
#include "distvote/crypto/blind.hpp"
#include "distvote/crypto/threshold.hpp"

using namespace distvote;
namespace cr = distvote::crypto;

static void BM_ProveBallot(benchmark::State& state) {
  const auto& g = cr::Group::standard();
  Rng rng(1);
  cr::PublicKey pk{g.pow_g(g.random_scalar(rng))};
  const auto d = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cr::prove_ballot(g, pk, 0, d, rng));
}
BENCHMARK(BM_ProveBallot)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_VerifyBallot(benchmark::State& state) {
  const auto& g = cr::Group::standard();
  Rng rng(2);
  cr::PublicKey pk{g.pow_g(g.random_scalar(rng))};
  auto b = cr::prove_ballot(g, pk, 1, static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cr::verify_ballot(g, pk, b.ciphertexts, b.proof));
  }
}
BENCHMARK(BM_VerifyBallot)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_ThresholdDecrypt(benchmark::State& state) {
  const auto& g = cr::Group::standard();
  auto key = cr::threshold_keygen(3, 5, g, 3);
  Rng rng(3);
  auto c = cr::encrypt(g, key.pk, 40, g.random_scalar(rng));
  for (auto _ : state) {
    std::vector<cr::DecryptionShare> shares;
    for (std::size_t i = 0; i < 3; ++i) {
      shares.push_back(cr::partial_decrypt(g, key.shares[i], c));
    }
    benchmark::DoNotOptimize(cr::combine(g, shares, 3, c, 1000));
  }
}
BENCHMARK(BM_ThresholdDecrypt)->Unit(benchmark::kMillisecond);

static void BM_BlindIssue(benchmark::State& state) {
  Rng rng(4);
  cr::Issuer issuer(cr::generate_rsa(1024, rng));
  std::uint32_t id = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cr::issue_tokens({id++}, issuer, id));
  }
}
BENCHMARK(BM_BlindIssue)->Unit(benchmark::kMillisecond);
