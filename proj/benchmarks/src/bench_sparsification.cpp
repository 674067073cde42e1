#include <benchmark/benchmark.h>

#include "segcal/rng.hpp"
#include "segcal/sparsification.hpp"
#include "segcal/synth.hpp"

namespace {

std::vector<segcal::FrameRecord> scenario(std::size_t frames) {
  segcal::ScenarioSpec spec;
  spec.num_frames = frames;
  spec.accuracy = {0.8};
  spec.emit_samples = false;
  spec.layout = segcal::Layout::blobs;
  std::vector<segcal::FrameRecord> out;
  for (auto& f : segcal::generate_scenario(spec)) out.push_back(std::move(f.frame));
  return out;
}

void BM_UncertaintyRanking(benchmark::State& state) {
  segcal::rng::SplitMix64 gen(1);
  std::vector<double> u(static_cast<std::size_t>(state.range(0)));
  for (double& x : u) x = gen.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(segcal::uncertainty_ranking(u, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_UncertaintyRanking)->Arg(1 << 14)->Arg(1 << 18)->Arg(1 << 21)->Unit(benchmark::kMillisecond);

void BM_EvaluateExact(benchmark::State& state) {
  const auto frames = scenario(static_cast<std::size_t>(state.range(0)));
  segcal::EvaluationOptions o;
  o.kind = segcal::UncertaintyKind::precomputed;
  const auto config = segcal::ClassConfig::numbered(20);
  for (auto _ : state) benchmark::DoNotOptimize(segcal::evaluate_dataset(frames, config, o));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 64 * 512);
}
BENCHMARK(BM_EvaluateExact)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_EvaluateBinned(benchmark::State& state) {
  const auto frames = scenario(16);
  segcal::EvaluationOptions o;
  o.kind = segcal::UncertaintyKind::precomputed;
  const auto config = segcal::ClassConfig::numbered(20);
  for (auto _ : state) {
    benchmark::DoNotOptimize(segcal::binned_evaluate(frames, config, o, static_cast<std::size_t>(state.range(0))));
  }
  state.SetItemsProcessed(state.iterations() * 16 * 64 * 512);
}
BENCHMARK(BM_EvaluateBinned)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
