#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lnmt/encoder.hpp"
#include "lnmt/rng.hpp"

using namespace lnmt;

namespace {

Vocab small_vocab(int n_tokens, int dim, std::uint64_t seed) {
  std::vector<std::string> tokens = {"<pad>", "<unk>"};
  for (int i = 0; i < n_tokens; ++i) tokens.push_back("t" + std::to_string(i));
  Rng rng(seed);
  Mat emb(n_tokens + 2, dim);
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    for (Eigen::Index j = 0; j < emb.cols(); ++j) emb(i, j) = rng.normal(0.0, 0.3);
  }
  return Vocab::from_tokens(std::move(tokens), std::move(emb));
}

EncodedSample random_sample(int n_seq, int max_tokens, int vocab_size, Rng& rng,
                            bool include_empty_row) {
  EncodedSample enc;
  enc.tokens = IntMat::Constant(n_seq, max_tokens, kPadIndex);
  enc.lengths.resize(static_cast<std::size_t>(n_seq));
  enc.emotion = Mat::Zero(n_seq, kEmotionDim);
  for (int i = 0; i < n_seq; ++i) {
    if (include_empty_row && i == n_seq - 1) {
      enc.lengths[static_cast<std::size_t>(i)] = 1;  // empty report: one PAD token
      continue;
    }
    const int len = static_cast<int>(rng.uniform_int(1, max_tokens));
    enc.lengths[static_cast<std::size_t>(i)] = len;
    for (int j = 0; j < len; ++j) {
      enc.tokens(i, j) = static_cast<int>(rng.uniform_int(2, vocab_size - 1));
    }
    for (int e = 0; e < kEmotionDim; ++e) enc.emotion(i, e) = rng.normal(0.0, 0.4);
  }
  return enc;
}

struct GradCheckStats {
  double worst_rel = 0.0;
  std::string worst_tensor;
};

GradCheckStats run_gradcheck(EncoderConfig cfg, std::uint64_t seed) {
  Vocab vocab = small_vocab(8, cfg.d_model, seed * 13 + 5);
  EncoderParams params = init_params(cfg, vocab, seed);
  Rng rng(seed * 101 + 7);
  const EncodedSample enc = random_sample(3, cfg.max_tokens, vocab.size(), rng, true);
  const double y = rng.bernoulli(0.5) ? 1.0 : 0.0;

  Vec grad = Vec::Zero(params.store.size());
  const ForwardTrace trace = forward(enc, params);
  backward(trace, enc, params, bce_grad(trace.p, y), grad);

  const double eps = 1e-4;
  GradCheckStats stats;
  Vec& flat = params.store.flat();
  for (Eigen::Index k = 0; k < flat.size(); ++k) {
    const double saved = flat[k];
    flat[k] = saved + eps;
    const double up = bce_loss(forward(enc, params).p, y);
    flat[k] = saved - eps;
    const double down = bce_loss(forward(enc, params).p, y);
    flat[k] = saved;
    const double fd = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-6});
    const double rel = std::abs(grad[k] - fd) / denom;
    if (rel > stats.worst_rel) {
      stats.worst_rel = rel;
      stats.worst_tensor = params.store.name_at(k);
    }
  }
  return stats;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences on the tiny model") {
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.layers_token = 1;
  cfg.layers_report = 1;
  cfg.max_tokens = 5;
  cfg.max_sequences = 4;

  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const GradCheckStats stats = run_gradcheck(cfg, seed);
    CAPTURE(seed);
    CAPTURE(stats.worst_tensor);
    CHECK(stats.worst_rel < 1e-3);
  }
}

TEST_CASE("gradcheck also passes with the emotion branch disabled") {
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.layers_token = 1;
  cfg.layers_report = 1;
  cfg.max_tokens = 5;
  cfg.max_sequences = 4;
  cfg.use_emotion = false;
  const GradCheckStats stats = run_gradcheck(cfg, 4);
  CAPTURE(stats.worst_tensor);
  CHECK(stats.worst_rel < 1e-3);
}

TEST_CASE("zero upstream gradient yields an all-zero gradient set") {
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.layers_token = 1;
  cfg.layers_report = 1;
  cfg.max_tokens = 5;
  cfg.max_sequences = 4;
  Vocab vocab = small_vocab(8, cfg.d_model, 3);
  EncoderParams params = init_params(cfg, vocab, 3);
  Rng rng(21);
  const EncodedSample enc = random_sample(3, cfg.max_tokens, vocab.size(), rng, false);

  Vec grad = Vec::Zero(params.store.size());
  const ForwardTrace trace = forward(enc, params);
  backward(trace, enc, params, 0.0, grad);
  CHECK(grad.isZero());
}

TEST_CASE("classifier bias gradient equals dL/dlogit exactly") {
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.layers_token = 1;
  cfg.layers_report = 1;
  cfg.max_tokens = 5;
  cfg.max_sequences = 4;
  Vocab vocab = small_vocab(8, cfg.d_model, 9);
  EncoderParams params = init_params(cfg, vocab, 9);
  Rng rng(33);
  const EncodedSample enc = random_sample(3, cfg.max_tokens, vocab.size(), rng, false);

  const ForwardTrace trace = forward(enc, params);
  const double y = 1.0;
  Vec grad = Vec::Zero(params.store.size());
  backward(trace, enc, params, bce_grad(trace.p, y), grad);

  const auto& spec = params.store.spec(params.cls_b);
  const double bias_grad = grad[spec.offset];
  // For sigmoid + BCE the logit gradient collapses to p - y.
  CHECK(bias_grad == doctest::Approx(trace.p - y).epsilon(1e-12));
}

TEST_CASE("backward rejects an incomplete trace and a wrong-size buffer") {
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.layers_token = 1;
  cfg.layers_report = 1;
  cfg.max_tokens = 5;
  cfg.max_sequences = 4;
  Vocab vocab = small_vocab(8, cfg.d_model, 9);
  EncoderParams params = init_params(cfg, vocab, 9);
  Rng rng(33);
  const EncodedSample enc = random_sample(2, cfg.max_tokens, vocab.size(), rng, false);

  ForwardTrace empty;
  Vec grad = Vec::Zero(params.store.size());
  CHECK_THROWS_AS(backward(empty, enc, params, 1.0, grad), Error);

  const ForwardTrace trace = forward(enc, params);
  Vec small = Vec::Zero(3);
  CHECK_THROWS_AS(backward(trace, enc, params, 1.0, small), Error);
}
