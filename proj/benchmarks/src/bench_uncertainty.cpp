#include <benchmark/benchmark.h>

#include "segcal/rng.hpp"
#include "segcal/uncertainty.hpp"

namespace {

segcal::MCSampleSet random_samples(std::size_t T, std::size_t N, std::size_t C) {
  segcal::rng::SplitMix64 gen(3);
  std::vector<double> p(T * N * C);
  for (std::size_t r = 0; r < T * N; ++r) {
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += p[r * C + c] = gen.uniform();
    for (std::size_t c = 0; c < C; ++c) p[r * C + c] /= z;
  }
  return segcal::MCSampleSet(T, N, C, std::move(p));
}

void BM_PredictiveEntropy(benchmark::State& state) {
  const auto s = random_samples(1, 1 << 16, 20);
  for (auto _ : state) benchmark::DoNotOptimize(segcal::predictive_entropy(s.data(), 20));
  state.SetItemsProcessed(state.iterations() * (1 << 16));
}
BENCHMARK(BM_PredictiveEntropy);

void BM_MutualInformation(benchmark::State& state) {
  const auto s = random_samples(static_cast<std::size_t>(state.range(0)), 1 << 14, 20);
  for (auto _ : state) benchmark::DoNotOptimize(segcal::mutual_information(s));
  state.SetItemsProcessed(state.iterations() * (1 << 14));
}
BENCHMARK(BM_MutualInformation)->Arg(2)->Arg(8)->Arg(32);

}  // namespace
