// Serial reference vs OpenMP kernels, and serial vs parallel episode batches.

#include <random>

#include <benchmark/benchmark.h>

#include "pathcal/branchy_sim.hpp"
#include "pathcal/episode.hpp"
#include "pathcal/kernels.hpp"

using namespace pathcal;

namespace {

LogitRow random_row(std::size_t n) {
  std::mt19937_64 gen(n);
  std::normal_distribution<double> d(0.0, 3.0);
  LogitRow row(n);
  for (auto& v : row) v = d(gen);
  return row;
}

void BM_SoftmaxSerial(benchmark::State& state) {
  auto row = random_row(state.range(0));
  std::vector<double> out(row.size());
  for (auto _ : state) {
    kernels::serial::softmax(row, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SoftmaxOpenMP(benchmark::State& state) {
  auto row = random_row(state.range(0));
  std::vector<double> out(row.size());
  for (auto _ : state) {
    kernels::softmax(row, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_SoftmaxSerial)->RangeMultiplier(10)->Range(1000, 1000000);
BENCHMARK(BM_SoftmaxOpenMP)->RangeMultiplier(10)->Range(1000, 1000000);

struct BatchFixture {
  BranchySim sim{default_branchy_config()};
  OriginalController original;
  SamplerConfig sampler;
  std::vector<EpisodeSpec> specs;
  explicit BatchFixture(std::size_t n)
      : specs(n, EpisodeSpec{{}, {}, {sim.config().end_tag}, false}) {}
};

void BM_BatchSerial(benchmark::State& state) {
  BatchFixture f(state.range(0));
  for (auto _ : state) {
    auto r = serial::run_batch(f.sim, f.original, f.sampler, f.specs);
    benchmark::DoNotOptimize(r.data());
  }
}

void BM_BatchOpenMP(benchmark::State& state) {
  BatchFixture f(state.range(0));
  for (auto _ : state) {
    auto r = run_batch(f.sim, f.original, f.sampler, f.specs);
    benchmark::DoNotOptimize(r.data());
  }
}

BENCHMARK(BM_BatchSerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchOpenMP)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
