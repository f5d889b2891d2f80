#include <random>

#include <benchmark/benchmark.h>

#include "qsk/latmodel/model.hpp"

using namespace qsk::latmodel;

namespace {

std::vector<RttTriple> synthetic(std::size_t n) {
  std::mt19937_64 rng(7);
  std::lognormal_distribution<double> dns(2.3, 0.7), server(3.3, 0.6);
  std::normal_distribution<double> margin(4, 15);
  std::vector<RttTriple> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].node_id = "n" + std::to_string(i);
    out[i].rtt_dns_ms = dns(rng);
    out[i].rtt_server_ms = server(rng);
    out[i].rtt_direct_ms = std::max(0.5, out[i].rtt_server_ms + margin(rng));
  }
  return out;
}

void BM_StatsSerial(benchmark::State& state) {
  const auto data = synthetic(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dataset_stats_serial(data));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_StatsParallel(benchmark::State& state) {
  const auto data = synthetic(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dataset_stats(data));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_StatsSerial)->RangeMultiplier(10)->Range(474, 474'000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StatsParallel)->RangeMultiplier(10)->Range(474, 474'000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
