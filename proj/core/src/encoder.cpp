#include "lnmt/encoder.hpp"

#include <cmath>

namespace lnmt {

namespace {

constexpr double kLayerNormEps = 1e-5;

double gelu(double x) { return 0.5 * x * std::erfc(-x * M_SQRT1_2); }

double gelu_grad(double x) {
  const double phi = 0.5 * std::erfc(-x * M_SQRT1_2);
  const double dens = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return phi + x * dens;
}

template <typename RowXpr>
void softmax_row_inplace(RowXpr row) {
  const double m = row.maxCoeff();
  row = (row.array() - m).exp();
  row /= row.sum();
}

Vec softmax_vec(const Vec& s) {
  Vec out = s;
  const double m = out.maxCoeff();
  out = (out.array() - m).exp();
  out /= out.sum();
  return out;
}

/// Row-wise softmax Jacobian application: ds = p .* (dp - sum(p .* dp)).
Mat softmax_rows_backward(const Mat& p, const Mat& dp) {
  Mat ds(p.rows(), p.cols());
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double dot = p.row(r).dot(dp.row(r));
    ds.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
  }
  return ds;
}

Vec softmax_vec_backward(const Vec& p, const Vec& dp) {
  const double dot = p.dot(dp);
  return p.array() * (dp.array() - dot);
}

struct LayerNormOut {
  Mat x_hat;
  Vec inv_sigma;
  Mat y;
};

LayerNormOut layer_norm(const Mat& x, Eigen::Map<const Mat> gain, Eigen::Map<const Mat> bias) {
  LayerNormOut out;
  const Eigen::Index n = x.rows(), d = x.cols();
  out.x_hat.resize(n, d);
  out.inv_sigma.resize(n);
  out.y.resize(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = x.row(r).mean();
    Eigen::RowVectorXd c = x.row(r).array() - mu;
    const double var = c.squaredNorm() / static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    out.inv_sigma[r] = inv;
    out.x_hat.row(r) = c * inv;
    out.y.row(r) = out.x_hat.row(r).cwiseProduct(gain.col(0).transpose()) + bias.col(0).transpose();
  }
  return out;
}

/// dy -> dx; accumulates gain/bias gradients.
Mat layer_norm_backward(const Mat& dy, const Mat& x_hat, const Vec& inv_sigma,
                        Eigen::Map<const Mat> gain, Eigen::Map<Mat> dgain,
                        Eigen::Map<Mat> dbias) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  Mat dx(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    dgain.col(0).noalias() += (dy.row(r).cwiseProduct(x_hat.row(r))).transpose();
    dbias.col(0).noalias() += dy.row(r).transpose();
    Eigen::RowVectorXd t = dy.row(r).cwiseProduct(gain.col(0).transpose());
    const double m1 = t.mean();
    const double m2 = t.cwiseProduct(x_hat.row(r)).mean();
    dx.row(r) = inv_sigma[r] * (t.array() - m1 - x_hat.row(r).array() * m2);
  }
  return dx;
}

Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Mat mask(rows, cols);
  const double keep = 1.0 - rate;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      mask(r, c) = rng.uniform() < rate ? 0.0 : 1.0 / keep;
    }
  }
  return mask;
}

void check_finite(const Mat& m, const char* stage) {
  if (!m.allFinite()) throw Error(std::string("forward: non-finite value at stage ") + stage);
}

void check_finite(const Vec& v, const char* stage) {
  if (!v.allFinite()) throw Error(std::string("forward: non-finite value at stage ") + stage);
}

AttentionBlockTrace attention_block_forward(const Mat& x, const EncoderParams& p,
                                            const AttentionLayerHandles& h, double dropout,
                                            Rng* rng) {
  const ParamStore& ps = p.store;
  const int n_heads = p.cfg.n_heads;
  const Eigen::Index d = x.cols();
  const Eigen::Index dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  AttentionBlockTrace t;
  t.x_in = x;

  auto ln1 = layer_norm(x, ps.tensor(h.ln1_gain), ps.tensor(h.ln1_bias));
  t.x1_hat = std::move(ln1.x_hat);
  t.ln1_inv_sigma = std::move(ln1.inv_sigma);
  t.a = std::move(ln1.y);

  t.q = t.a * ps.tensor(h.wq);
  t.q.rowwise() += ps.tensor(h.bq).col(0).transpose();
  t.k = t.a * ps.tensor(h.wk);
  t.k.rowwise() += ps.tensor(h.bk).col(0).transpose();
  t.v = t.a * ps.tensor(h.wv);
  t.v.rowwise() += ps.tensor(h.bv).col(0).transpose();

  t.o_cat.resize(x.rows(), d);
  t.attn.resize(static_cast<std::size_t>(n_heads));
  for (int head = 0; head < n_heads; ++head) {
    const auto qh = t.q.middleCols(head * dh, dh);
    const auto kh = t.k.middleCols(head * dh, dh);
    const auto vh = t.v.middleCols(head * dh, dh);
    Mat s = qh * kh.transpose() * scale;
    for (Eigen::Index r = 0; r < s.rows(); ++r) softmax_row_inplace(s.row(r));
    t.attn[static_cast<std::size_t>(head)] = s;
    t.o_cat.middleCols(head * dh, dh).noalias() = s * vh;
  }

  Mat attn_out = t.o_cat * ps.tensor(h.wo);
  attn_out.rowwise() += ps.tensor(h.bo).col(0).transpose();
  if (dropout > 0.0 && rng != nullptr) {
    t.drop1 = dropout_mask(attn_out.rows(), attn_out.cols(), dropout, *rng);
    attn_out = attn_out.cwiseProduct(t.drop1);
  }
  t.x_mid = x + attn_out;

  auto ln2 = layer_norm(t.x_mid, ps.tensor(h.ln2_gain), ps.tensor(h.ln2_bias));
  t.x2_hat = std::move(ln2.x_hat);
  t.ln2_inv_sigma = std::move(ln2.inv_sigma);
  t.b = std::move(ln2.y);

  t.u = t.b * ps.tensor(h.w1);
  t.u.rowwise() += ps.tensor(h.b1).col(0).transpose();
  t.g = t.u.unaryExpr([](double v) { return gelu(v); });
  Mat f = t.g * ps.tensor(h.w2);
  f.rowwise() += ps.tensor(h.b2).col(0).transpose();
  if (dropout > 0.0 && rng != nullptr) {
    t.drop2 = dropout_mask(f.rows(), f.cols(), dropout, *rng);
    f = f.cwiseProduct(t.drop2);
  }
  t.x_out = t.x_mid + f;
  return t;
}

/// Returns dx_in given dx_out; accumulates parameter gradients.
Mat attention_block_backward(const AttentionBlockTrace& t, const EncoderParams& p,
                             const AttentionLayerHandles& h, const Mat& dx_out, Vec& grad) {
  const ParamStore& ps = p.store;
  const int n_heads = p.cfg.n_heads;
  const Eigen::Index d = t.x_in.cols();
  const Eigen::Index dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // FFN branch: x_out = x_mid + drop2 .* (gelu(LN2(x_mid) W1 + b1) W2 + b2)
  Mat df = t.drop2.size() > 0 ? dx_out.cwiseProduct(t.drop2) : dx_out;
  ps.view(grad, h.w2).noalias() += t.g.transpose() * df;
  ps.view(grad, h.b2).col(0).noalias() += df.colwise().sum().transpose();
  Mat dg = df * ps.tensor(h.w2).transpose();
  Mat du = dg.cwiseProduct(t.u.unaryExpr([](double v) { return gelu_grad(v); }));
  ps.view(grad, h.w1).noalias() += t.b.transpose() * du;
  ps.view(grad, h.b1).col(0).noalias() += du.colwise().sum().transpose();
  Mat db = du * ps.tensor(h.w1).transpose();

  Mat dx_mid = dx_out + layer_norm_backward(db, t.x2_hat, t.ln2_inv_sigma, ps.tensor(h.ln2_gain),
                                            ps.view(grad, h.ln2_gain), ps.view(grad, h.ln2_bias));

  // Attention branch: x_mid = x_in + drop1 .* (O_cat Wo + bo)
  Mat do_wo = t.drop1.size() > 0 ? dx_mid.cwiseProduct(t.drop1) : dx_mid;
  ps.view(grad, h.wo).noalias() += t.o_cat.transpose() * do_wo;
  ps.view(grad, h.bo).col(0).noalias() += do_wo.colwise().sum().transpose();
  Mat do_cat = do_wo * ps.tensor(h.wo).transpose();

  Mat dq = Mat::Zero(t.q.rows(), d), dk = Mat::Zero(t.k.rows(), d), dv = Mat::Zero(t.v.rows(), d);
  for (int head = 0; head < n_heads; ++head) {
    const Mat& attn = t.attn[static_cast<std::size_t>(head)];
    const auto qh = t.q.middleCols(head * dh, dh);
    const auto kh = t.k.middleCols(head * dh, dh);
    const auto vh = t.v.middleCols(head * dh, dh);
    const auto doh = do_cat.middleCols(head * dh, dh);

    Mat dattn = doh * vh.transpose();
    dv.middleCols(head * dh, dh).noalias() = attn.transpose() * doh;
    Mat ds = softmax_rows_backward(attn, dattn);
    dq.middleCols(head * dh, dh).noalias() = ds * kh * scale;
    dk.middleCols(head * dh, dh).noalias() = ds.transpose() * qh * scale;
  }

  ps.view(grad, h.wq).noalias() += t.a.transpose() * dq;
  ps.view(grad, h.bq).col(0).noalias() += dq.colwise().sum().transpose();
  ps.view(grad, h.wk).noalias() += t.a.transpose() * dk;
  ps.view(grad, h.bk).col(0).noalias() += dk.colwise().sum().transpose();
  ps.view(grad, h.wv).noalias() += t.a.transpose() * dv;
  ps.view(grad, h.bv).col(0).noalias() += dv.colwise().sum().transpose();

  Mat da = dq * ps.tensor(h.wq).transpose();
  da.noalias() += dk * ps.tensor(h.wk).transpose();
  da.noalias() += dv * ps.tensor(h.wv).transpose();

  return dx_mid + layer_norm_backward(da, t.x1_hat, t.ln1_inv_sigma, ps.tensor(h.ln1_gain),
                                      ps.view(grad, h.ln1_gain), ps.view(grad, h.ln1_bias));
}

AttentionLayerHandles add_attention_layer(ParamStore& store, const std::string& prefix, int d,
                                          int ffn) {
  AttentionLayerHandles h;
  h.ln1_gain = store.add(prefix + ".ln1.gain", d, 1);
  h.ln1_bias = store.add(prefix + ".ln1.bias", d, 1);
  h.wq = store.add(prefix + ".attn.wq", d, d);
  h.bq = store.add(prefix + ".attn.bq", d, 1);
  h.wk = store.add(prefix + ".attn.wk", d, d);
  h.bk = store.add(prefix + ".attn.bk", d, 1);
  h.wv = store.add(prefix + ".attn.wv", d, d);
  h.bv = store.add(prefix + ".attn.bv", d, 1);
  h.wo = store.add(prefix + ".attn.wo", d, d);
  h.bo = store.add(prefix + ".attn.bo", d, 1);
  h.ln2_gain = store.add(prefix + ".ln2.gain", d, 1);
  h.ln2_bias = store.add(prefix + ".ln2.bias", d, 1);
  h.w1 = store.add(prefix + ".ffn.w1", d, ffn);
  h.b1 = store.add(prefix + ".ffn.b1", ffn, 1);
  h.w2 = store.add(prefix + ".ffn.w2", ffn, d);
  h.b2 = store.add(prefix + ".ffn.b2", d, 1);
  return h;
}

void xavier_fill(Eigen::Map<Mat> w, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-a, a);
  }
}

void init_attention_layer(ParamStore& store, const AttentionLayerHandles& h, Rng& rng) {
  store.tensor(h.ln1_gain).setOnes();
  store.tensor(h.ln2_gain).setOnes();
  xavier_fill(store.tensor(h.wq), rng);
  xavier_fill(store.tensor(h.wk), rng);
  xavier_fill(store.tensor(h.wv), rng);
  xavier_fill(store.tensor(h.wo), rng);
  xavier_fill(store.tensor(h.w1), rng);
  xavier_fill(store.tensor(h.w2), rng);
}

Mat sinusoidal_positions(int max_len, int d) {
  Mat pe(max_len, d);
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i < d; ++i) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, 2.0 * (i / 2) / static_cast<double>(d));
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace

EncoderParams init_params(const EncoderConfig& cfg, const Vocab& vocab, std::uint64_t seed) {
  if (cfg.d_model <= 0 || cfg.n_heads <= 0) throw Error("init_params: bad dimensions");
  if (cfg.d_model % cfg.n_heads != 0) {
    throw Error("init_params: d_model " + std::to_string(cfg.d_model) +
                " not divisible by n_heads " + std::to_string(cfg.n_heads));
  }
  if (vocab.embedding_dim() != cfg.d_model) {
    throw Error("init_params: vocab embedding dim " + std::to_string(vocab.embedding_dim()) +
                " != d_model " + std::to_string(cfg.d_model));
  }

  EncoderParams p;
  p.cfg = cfg;
  p.vocab_size = vocab.size();

  p.embedding = p.store.add("embedding", vocab.size(), cfg.d_model);
  for (int l = 0; l < cfg.layers_token; ++l) {
    p.token_layers.push_back(
        add_attention_layer(p.store, "token" + std::to_string(l), cfg.d_model, cfg.ffn_dim()));
  }
  for (int l = 0; l < cfg.layers_report; ++l) {
    p.report_layers.push_back(
        add_attention_layer(p.store, "report" + std::to_string(l), cfg.d_model, cfg.ffn_dim()));
  }
  p.gamma_w = p.store.add("pool.gamma_w", cfg.d_model, 1);
  p.gamma_s = p.store.add("pool.gamma_s", cfg.d_model, 1);
  p.emo_wq = p.store.add("emotion.wq", kEmotionDim, cfg.d_model);
  p.emo_wk = p.store.add("emotion.wk", kEmotionDim, cfg.d_model);
  p.emo_wv = p.store.add("emotion.wv", kEmotionDim, cfg.d_model);
  p.cls_w = p.store.add("classifier.w", cfg.feature_dim(), 1);
  p.cls_b = p.store.add("classifier.b", 1, 1);
  p.store.finalize();

  Rng rng(seed);
  p.store.tensor(p.embedding) = vocab.embeddings();
  for (const auto& h : p.token_layers) init_attention_layer(p.store, h, rng);
  for (const auto& h : p.report_layers) init_attention_layer(p.store, h, rng);
  const double gamma_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  for (auto handle : {p.gamma_w, p.gamma_s}) {
    auto t = p.store.tensor(handle);
    for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, 0) = rng.normal(0.0, gamma_std);
  }
  xavier_fill(p.store.tensor(p.emo_wq), rng);
  xavier_fill(p.store.tensor(p.emo_wk), rng);
  xavier_fill(p.store.tensor(p.emo_wv), rng);
  xavier_fill(p.store.tensor(p.cls_w), rng);

  p.positional = sinusoidal_positions(cfg.max_tokens, cfg.d_model);
  return p;
}

ForwardTrace forward(const EncodedSample& enc, const EncoderParams& params, Rng* dropout_rng) {
  const EncoderConfig& cfg = params.cfg;
  const ParamStore& ps = params.store;
  const int n_seq = enc.n_seq();
  if (n_seq < 1) throw Error("forward: sample has no sequences");
  if (enc.tokens.cols() > params.positional.rows()) {
    throw Error("forward: sample token capacity exceeds encoder max_tokens");
  }
  const double drop = cfg.dropout;
  Rng* rng = drop > 0.0 ? dropout_rng : nullptr;

  ForwardTrace t;
  t.n_seq = n_seq;
  t.lengths = enc.lengths;

  const auto emb = ps.tensor(params.embedding);
  t.embedded.resize(static_cast<std::size_t>(n_seq));
  if (rng != nullptr) t.token_keep.resize(static_cast<std::size_t>(n_seq));
  t.token_stacks.resize(static_cast<std::size_t>(n_seq));
  t.token_pool.resize(static_cast<std::size_t>(n_seq));
  t.sentence_repr.resize(n_seq, cfg.d_model);

  for (int i = 0; i < n_seq; ++i) {
    const int len = enc.lengths[static_cast<std::size_t>(i)];
    Mat x(len, cfg.d_model);
    for (int j = 0; j < len; ++j) {
      const int tok = enc.tokens(i, j);
      if (tok < 0 || tok >= params.vocab_size) throw Error("forward: token index out of range");
      x.row(j) = emb.row(tok) + params.positional.row(j);
    }
    if (rng != nullptr) {
      // token dropout: whole embedded rows, inverted scaling on the survivors
      Vec keep(len);
      for (int j = 0; j < len; ++j) {
        keep[j] = rng->uniform() < drop ? 0.0 : 1.0 / (1.0 - drop);
        x.row(j) *= keep[j];
      }
      t.token_keep[static_cast<std::size_t>(i)] = std::move(keep);
    }
    check_finite(x, "embedding");
    t.embedded[static_cast<std::size_t>(i)] = std::move(x);
    const Mat& x0 = t.embedded[static_cast<std::size_t>(i)];

    auto& stack = t.token_stacks[static_cast<std::size_t>(i)];
    for (const auto& h : params.token_layers) {
      stack.blocks.push_back(attention_block_forward(
          stack.blocks.empty() ? x0 : stack.blocks.back().x_out, params, h, drop, rng));
    }
    const Mat& z = stack.blocks.empty() ? x0 : stack.blocks.back().x_out;
    check_finite(z, "token attention stack");

    // Eq. 1 pooling: g = softmax(gamma_w . z_j), f_i = sum_j g_j z_j
    Vec scores = z * ps.tensor(params.gamma_w).col(0);
    Vec g = softmax_vec(scores);
    t.token_pool[static_cast<std::size_t>(i)] = g;
    t.sentence_repr.row(i) = (z.transpose() * g).transpose();
  }
  check_finite(t.sentence_repr, "token pooling");

  for (const auto& h : params.report_layers) {
    t.report_stack.blocks.push_back(attention_block_forward(
        t.report_stack.blocks.empty() ? t.sentence_repr : t.report_stack.blocks.back().x_out,
        params, h, drop, rng));
  }
  t.report_out = t.report_stack.blocks.empty() ? t.sentence_repr : t.report_stack.blocks.back().x_out;
  check_finite(t.report_out, "report attention stack");

  // Eq. 2 pooling: pi = softmax(gamma_s . z^s), f_sem = sum_i pi_i z_i^s
  Vec rep_scores = t.report_out * ps.tensor(params.gamma_s).col(0);
  t.report_pool = softmax_vec(rep_scores);
  t.f_sem = t.report_out.transpose() * t.report_pool;
  check_finite(t.f_sem, "report pooling");

  if (cfg.use_emotion) {
    // Eq. 3: queries carry the report-level semantics, scaled by 1/sqrt(d_model).
    t.emo_in = enc.emotion;
    t.hq = t.emo_in * ps.tensor(params.emo_wq) + t.report_out;
    t.hk = t.emo_in * ps.tensor(params.emo_wk);
    t.hv = t.emo_in * ps.tensor(params.emo_wv);
    Mat s = t.hq * t.hk.transpose() / std::sqrt(static_cast<double>(cfg.d_model));
    for (Eigen::Index r = 0; r < s.rows(); ++r) softmax_row_inplace(s.row(r));
    t.beta = std::move(s);
    t.f_emo = (t.beta * t.hv).colwise().mean().transpose();
    check_finite(t.f_emo, "emotion attention");
  } else {
    t.f_emo = Vec::Zero(cfg.d_model);
  }

  t.f_c.resize(cfg.feature_dim());
  t.f_c.head(cfg.d_model) = t.f_sem;
  t.f_c.tail(cfg.d_model) = t.f_emo;
  t.logit = ps.tensor(params.cls_w).col(0).dot(t.f_c) + ps.tensor(params.cls_b)(0, 0);
  if (!std::isfinite(t.logit)) throw Error("forward: non-finite value at stage classifier");
  t.p = sigmoid(t.logit);
  t.complete = true;
  return t;
}

void backward(const ForwardTrace& t, const EncodedSample& enc, const EncoderParams& params,
              double upstream, Vec& grad) {
  if (!t.complete) throw Error("backward: trace is incomplete");
  const EncoderConfig& cfg = params.cfg;
  const ParamStore& ps = params.store;
  if (grad.size() != ps.size()) throw Error("backward: gradient buffer size mismatch");

  // Sigmoid chain evaluated at the clamped probability so the loss gradient
  // stays finite and exact (p_c - y wherever the clamp is inactive).
  const double pc = std::min(1.0 - kProbEps, std::max(kProbEps, t.p));
  const double dlogit = upstream * pc * (1.0 - pc);

  ps.view(grad, params.cls_w).col(0).noalias() += dlogit * t.f_c;
  ps.view(grad, params.cls_b)(0, 0) += dlogit;
  Vec df_c = dlogit * ps.tensor(params.cls_w).col(0);
  Vec df_sem = df_c.head(cfg.d_model);
  Vec df_emo = df_c.tail(cfg.d_model);

  Mat d_report_out = Mat::Zero(t.n_seq, cfg.d_model);

  if (cfg.use_emotion) {
    const double inv_n = 1.0 / static_cast<double>(t.n_seq);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
    Mat d_bhv = inv_n * Vec::Ones(t.n_seq) * df_emo.transpose();  // d(beta*hv)
    Mat dbeta = d_bhv * t.hv.transpose();
    Mat dhv = t.beta.transpose() * d_bhv;
    Mat ds = softmax_rows_backward(t.beta, dbeta);
    Mat dhq = ds * t.hk * scale;
    Mat dhk = ds.transpose() * t.hq * scale;
    ps.view(grad, params.emo_wq).noalias() += t.emo_in.transpose() * dhq;
    ps.view(grad, params.emo_wk).noalias() += t.emo_in.transpose() * dhk;
    ps.view(grad, params.emo_wv).noalias() += t.emo_in.transpose() * dhv;
    d_report_out += dhq;  // residual query path
  }

  // Report pooling backward.
  {
    const Vec& pi = t.report_pool;
    d_report_out += pi * df_sem.transpose();
    Vec dpi = t.report_out * df_sem;
    Vec dscores = softmax_vec_backward(pi, dpi);
    ps.view(grad, params.gamma_s).col(0).noalias() += t.report_out.transpose() * dscores;
    d_report_out += dscores * ps.tensor(params.gamma_s).col(0).transpose();
  }

  // Report-level attention stack backward.
  Mat d_sentence = d_report_out;
  for (std::size_t l = t.report_stack.blocks.size(); l-- > 0;) {
    d_sentence = attention_block_backward(t.report_stack.blocks[l], params,
                                          params.report_layers[l], d_sentence, grad);
  }

  // Per-sequence token pooling + token stack backward, then embedding scatter.
  const bool train_embeddings = cfg.finetune_embeddings;
  for (int i = 0; i < t.n_seq; ++i) {
    const auto& stack = t.token_stacks[static_cast<std::size_t>(i)];
    const Mat& z = stack.blocks.empty() ? t.embedded[static_cast<std::size_t>(i)]
                                        : stack.blocks.back().x_out;
    const Vec& g = t.token_pool[static_cast<std::size_t>(i)];
    Vec df_i = d_sentence.row(i).transpose();

    Mat dz = g * df_i.transpose();
    Vec dg = z * df_i;
    Vec dscores = softmax_vec_backward(g, dg);
    ps.view(grad, params.gamma_w).col(0).noalias() += z.transpose() * dscores;
    dz += dscores * ps.tensor(params.gamma_w).col(0).transpose();

    for (std::size_t l = stack.blocks.size(); l-- > 0;) {
      dz = attention_block_backward(stack.blocks[l], params, params.token_layers[l], dz, grad);
    }

    if (train_embeddings) {
      auto demb = ps.view(grad, params.embedding);
      const bool dropped = !t.token_keep.empty();
      const int len = t.lengths[static_cast<std::size_t>(i)];
      for (int j = 0; j < len; ++j) {
        const double keep = dropped ? t.token_keep[static_cast<std::size_t>(i)][j] : 1.0;
        if (keep != 0.0) demb.row(enc.tokens(i, j)).noalias() += keep * dz.row(j);
      }
    }
  }
}

double bce_loss(double p, double y) {
  if (y < 0.0 || y > 1.0) throw Error("bce_loss: label outside [0,1]");
  const double pc = std::min(1.0 - kProbEps, std::max(kProbEps, p));
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

double bce_grad(double p, double y) {
  if (y < 0.0 || y > 1.0) throw Error("bce_grad: label outside [0,1]");
  const double pc = std::min(1.0 - kProbEps, std::max(kProbEps, p));
  return -(y / pc - (1.0 - y) / (1.0 - pc));
}

}  // namespace lnmt
