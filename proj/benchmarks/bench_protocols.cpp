#include <benchmark/benchmark.h>

#include "distvote/baselines.hpp"
#include "distvote/chainvote.hpp"
#include "distvote/dpol.hpp"
#include "distvote/spp.hpp"

using namespace distvote;

namespace {

std::vector<std::size_t> choices(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i % 2;
  return out;
}

}  // namespace

static void BM_Dpol(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  DpolConfig cfg{DpolParams{n, 1, 2}, false, 1'000'000};
  auto c = choices(n);
  std::size_t messages = 0;
  for (auto _ : state) messages = run_dpol(cfg, c, {}, 1).run.message_count();
  state.counters["messages"] = static_cast<double>(messages);
}
BENCHMARK(BM_Dpol)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Spp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SppConfig cfg;
  cfg.params = {n, 4, 3, 2};
  auto c = choices(n);
  std::size_t messages = 0;
  for (auto _ : state) messages = run_spp(cfg, c, {}, 1).run.message_count();
  state.counters["messages"] = static_cast<double>(messages);
}
BENCHMARK(BM_Spp)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_Chain(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  ChainConfig cfg{ChainParams{.n = n}, 1'000'000};
  auto c = choices(n);
  std::size_t messages = 0;
  for (auto _ : state) messages = run_chain(cfg, c, {}, 1).run.message_count();
  state.counters["messages"] = static_cast<double>(messages);
}
BENCHMARK(BM_Chain)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_Mesh(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto c = choices(n);
  std::size_t messages = 0;
  for (auto _ : state) messages = run_mesh({n, 2}, c, {}, 1).run.message_count();
  state.counters["messages"] = static_cast<double>(messages);
}
BENCHMARK(BM_Mesh)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
