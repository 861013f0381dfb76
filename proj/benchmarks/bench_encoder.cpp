#include <benchmark/benchmark.h>

#include "lnmt/encoder.hpp"
#include "lnmt/rng.hpp"

namespace {

using namespace lnmt;

Vocab bench_vocab(int n_tokens, int dim) {
  std::vector<std::string> tokens = {"<pad>", "<unk>"};
  for (int i = 0; i < n_tokens; ++i) tokens.push_back("t" + std::to_string(i));
  Rng rng(7);
  Mat emb(n_tokens + 2, dim);
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    for (Eigen::Index j = 0; j < emb.cols(); ++j) emb(i, j) = rng.normal(0.0, 0.3);
  }
  return Vocab::from_tokens(std::move(tokens), std::move(emb));
}

EncodedSample bench_sample(int n_seq, int tokens_per_seq, int max_tokens, int vocab, Rng& rng) {
  EncodedSample enc;
  enc.tokens = IntMat::Constant(n_seq, max_tokens, kPadIndex);
  enc.lengths.assign(static_cast<std::size_t>(n_seq), tokens_per_seq);
  enc.emotion = Mat::Zero(n_seq, kEmotionDim);
  for (int i = 0; i < n_seq; ++i) {
    for (int j = 0; j < tokens_per_seq; ++j) {
      enc.tokens(i, j) = static_cast<int>(rng.uniform_int(2, vocab - 1));
    }
    for (int e = 0; e < kEmotionDim; ++e) enc.emotion(i, e) = rng.normal(0.0, 0.4);
  }
  return enc;
}

struct BenchSetup {
  EncoderParams params;
  EncodedSample sample;
};

BenchSetup make_setup(int d_model, int heads, int layers, int n_seq, int tokens_per_seq) {
  EncoderConfig cfg;
  cfg.d_model = d_model;
  cfg.n_heads = heads;
  cfg.layers_token = layers;
  cfg.layers_report = layers;
  cfg.max_tokens = tokens_per_seq;
  cfg.max_sequences = n_seq;
  Vocab vocab = bench_vocab(64, d_model);
  Rng rng(13);
  return BenchSetup{init_params(cfg, vocab, 3),
                    bench_sample(n_seq, tokens_per_seq, tokens_per_seq, vocab.size(), rng)};
}

void BM_ForwardDesk(benchmark::State& state) {
  BenchSetup s = make_setup(16, 2, 1, 5, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(s.sample, s.params).p);
  }
}
BENCHMARK(BM_ForwardDesk);

void BM_ForwardBackwardDesk(benchmark::State& state) {
  BenchSetup s = make_setup(16, 2, 1, 5, 12);
  Vec grad = Vec::Zero(s.params.store.size());
  for (auto _ : state) {
    ForwardTrace t = forward(s.sample, s.params);
    backward(t, s.sample, s.params, bce_grad(t.p, 1.0), grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_ForwardBackwardDesk);

void BM_ForwardMedium(benchmark::State& state) {
  BenchSetup s = make_setup(64, 4, 2, 10, 24);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(s.sample, s.params).p);
  }
}
BENCHMARK(BM_ForwardMedium);

void BM_ForwardPaperScale(benchmark::State& state) {
  BenchSetup s = make_setup(300, 4, 2, 8, 40);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(s.sample, s.params).p);
  }
}
BENCHMARK(BM_ForwardPaperScale);

}  // namespace
