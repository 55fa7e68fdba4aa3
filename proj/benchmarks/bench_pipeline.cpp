#include <benchmark/benchmark.h>

#include "tracediag/classifiers.hpp"
#include "tracediag/features.hpp"
#include "tracediag/indicators.hpp"
#include "tracediag/synthetic.hpp"
#include "tracediag/trace.hpp"

using namespace tracediag;

namespace {

std::vector<LabeledSample> corpus(std::size_t n) {
  std::vector<LabeledSample> out;
  for (auto& run : synthetic::generate_corpus(n, 7)) {
    out.push_back({extract_features(compute_indicators(run.trace)), run.labels, run.trace.run_id});
  }
  return out;
}

void BM_ParseTrace(benchmark::State& state) {
  synthetic::GeneratorConfig cfg;
  cfg.min_records = cfg.max_records = static_cast<int>(state.range(0));
  const std::string text = serialize_trace(synthetic::generate_trace({FaultType::Lr}, 1, cfg));
  for (auto _ : state) benchmark::DoNotOptimize(parse_trace(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseTrace)->Arg(30)->Arg(300);

void BM_ExtractFeatures(benchmark::State& state) {
  synthetic::GeneratorConfig cfg;
  cfg.min_records = cfg.max_records = static_cast<int>(state.range(0));
  const auto trace = synthetic::generate_trace({FaultType::Act}, 2, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(compute_indicators(trace)));
}
BENCHMARK(BM_ExtractFeatures)->Arg(30)->Arg(300)->Arg(3000);

void BM_KnnPredict(benchmark::State& state) {
  const auto data = corpus(static_cast<std::size_t>(state.range(0)));
  const auto model = KnnModel::fit(data, {5});
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(data[i++ % data.size()].features));
}
BENCHMARK(BM_KnnPredict)->Arg(200)->Arg(2000);

void BM_TrainDiagnosers(benchmark::State& state) {
  const auto data = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(train_diagnosers(data, {}, 3));
}
BENCHMARK(BM_TrainDiagnosers)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
