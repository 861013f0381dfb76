#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lnmt/common.hpp"
#include "lnmt/encode.hpp"
#include "lnmt/params.hpp"
#include "lnmt/rng.hpp"
#include "lnmt/vocab.hpp"

namespace lnmt {

struct EncoderConfig {
  int d_model = 300;
  int n_heads = 4;
  int layers_token = 2;   // token-level MHA depth
  int layers_report = 4;  // report-level MHA depth
  int max_tokens = 40;
  int max_sequences = 100;
  bool use_emotion = true;
  bool finetune_embeddings = true;
  double dropout = 0.0;   // 0 keeps forward deterministic

  int ffn_dim() const { return 4 * d_model; }
  int feature_dim() const { return 2 * d_model; }  // f_sem ++ f_emo
};

struct AttentionLayerHandles {
  int ln1_gain, ln1_bias;
  int wq, bq, wk, bk, wv, bv, wo, bo;
  int ln2_gain, ln2_bias;
  int w1, b1, w2, b2;
};

/// All trainable tensors of the baseline model in one flat store, plus the
/// fixed sinusoidal position table. Copyable by value.
struct EncoderParams {
  EncoderConfig cfg;
  int vocab_size = 0;
  ParamStore store;
  Mat positional;  // max_tokens x d_model, fixed

  int embedding = -1;
  std::vector<AttentionLayerHandles> token_layers;
  std::vector<AttentionLayerHandles> report_layers;
  int gamma_w = -1, gamma_s = -1;
  int emo_wq = -1, emo_wk = -1, emo_wv = -1;
  int cls_w = -1, cls_b = -1;
};

/// Xavier-uniform projections, zero biases, unit layer-norm gains, seeded.
/// The embedding tensor is copied from the vocab. Throws when d_model is not
/// divisible by n_heads.
EncoderParams init_params(const EncoderConfig& cfg, const Vocab& vocab, std::uint64_t seed);

struct AttentionBlockTrace {
  Mat x_in;
  Mat x1_hat;               // LN1 normalized input
  Vec ln1_inv_sigma;
  Mat a;                    // LN1 output
  Mat q, k, v;
  std::vector<Mat> attn;    // per head, rows sum to 1
  Mat o_cat;
  Mat drop1;                // dropout mask (empty when rate 0)
  Mat x_mid;
  Mat x2_hat;
  Vec ln2_inv_sigma;
  Mat b;                    // LN2 output
  Mat u;                    // FFN pre-activation
  Mat g;                    // gelu(u)
  Mat drop2;
  Mat x_out;
};

struct SequenceStackTrace {
  std::vector<AttentionBlockTrace> blocks;
};

/// Every intermediate of one forward pass, cached for the exact backward.
struct ForwardTrace {
  bool complete = false;
  int n_seq = 0;
  std::vector<int> lengths;

  std::vector<Vec> token_keep;           // per sequence: token dropout scale (empty = off)
  std::vector<Mat> embedded;             // per sequence, len x d (with positions)
  std::vector<SequenceStackTrace> token_stacks;
  std::vector<Vec> token_pool;           // g_i: softmax weights per sequence
  Mat sentence_repr;                     // f^s, n_seq x d
  SequenceStackTrace report_stack;       // over sentence_repr rows
  Mat report_out;                        // z^s, n_seq x d
  Vec report_pool;                       // pi
  Vec f_sem;

  Mat emo_in;                            // n_seq x 47
  Mat hq, hk, hv;                        // n_seq x d
  Mat beta;                              // n_seq x n_seq, rows sum to 1
  Vec f_emo;

  Vec f_c;                               // 2d
  double logit = 0.0;
  double p = 0.5;
};

/// Eq. 1/2 attention stacks with pooling, the emotion-aware attention, and
/// the sigmoid classifier. Throws if a stage produces a non-finite value.
/// `dropout_rng` is only touched when cfg.dropout > 0.
ForwardTrace forward(const EncodedSample& enc, const EncoderParams& params,
                     Rng* dropout_rng = nullptr);

/// Exact reverse pass; accumulates into `grad` (flat, same layout as params).
/// `upstream` is dL/dp.
void backward(const ForwardTrace& trace, const EncodedSample& enc,
              const EncoderParams& params, double upstream, Vec& grad);

inline constexpr double kProbEps = 1e-7;

/// Binary cross entropy with p clamped to [eps, 1-eps]. y may be soft.
double bce_loss(double p, double y);

/// d bce / d p at the clamped point.
double bce_grad(double p, double y);

}  // namespace lnmt
