#include <benchmark/benchmark.h>

#include "lnmt/metrics.hpp"
#include "lnmt/rng.hpp"
#include "lnmt/text.hpp"

namespace {

using namespace lnmt;

void BM_ComputeMetrics(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(9);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
  labels[0] = 0;
  labels[1] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_metrics(scores, labels).accuracy);
  }
}
BENCHMARK(BM_ComputeMetrics)->Arg(1000)->Arg(10000);

void BM_Tokenize(benchmark::State& state) {
  const std::string text =
      "Breaking NEWS: officials confirm the report was completely fabricated! "
      "Readers, do not share this until verified... 1234 sources say otherwise?";
  for (auto _ : state) {
    benchmark::DoNotOptimize(tokenize(text).size());
  }
}
BENCHMARK(BM_Tokenize);

}  // namespace
