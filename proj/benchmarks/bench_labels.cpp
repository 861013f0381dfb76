#include <benchmark/benchmark.h>

#include "lnmt/meanteacher.hpp"
#include "lnmt/rng.hpp"

namespace {

using namespace lnmt;

void BM_LabelSimilarity(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  std::vector<int> s(n), t(n);
  for (auto& v : s) v = rng.bernoulli(0.5) ? 1 : 0;
  for (auto& v : t) v = rng.bernoulli(0.6) ? 1 : 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(label_similarity(s, t).normalized);
  }
}
BENCHMARK(BM_LabelSimilarity)->Arg(2000)->Arg(20000);

void BM_Propagate(benchmark::State& state) {
  Rng rng(6);
  LabelSimilarityMatrix c;
  c.normalized << 0.7, 0.3, 0.2, 0.8;
  c.raw = c.normalized;
  double y = 0.4;
  for (auto _ : state) {
    y = propagate(y, rng.uniform(), c, 0.9);
    benchmark::DoNotOptimize(y);
  }
}
BENCHMARK(BM_Propagate);

void BM_UncertaintyBatch(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  Rng rng(7);
  Mat q_t(n, 2), q_s(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = rng.uniform(), b = rng.uniform();
    q_t.row(i) << a, 1.0 - a;
    q_s.row(i) << b, 1.0 - b;
  }
  for (auto _ : state) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      sum += uncertainty(q_t.row(i).transpose(), q_s.row(i).transpose(), 1.0).omega;
    }
    benchmark::DoNotOptimize(sum);
  }
}
BENCHMARK(BM_UncertaintyBatch)->Arg(2000);

void BM_ClassCenters(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  Rng rng(8);
  Mat f(n, 32);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 32; ++j) f(i, j) = rng.normal(0.0, 1.0);
    labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(class_centers(f, labels).centers);
  }
}
BENCHMARK(BM_ClassCenters)->Arg(2000);

}  // namespace
