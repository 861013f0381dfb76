#include "lnmt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nlohmann/json.hpp"

namespace lnmt {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

TrainConfig TrainConfig::paper_defaults() {
  TrainConfig cfg;
  cfg.encoder = EncoderConfig{};  // d_model 300, heads 4, L_w 2, L_r 4, 40/100
  cfg.adam = AdamConfig{};
  cfg.stage1 = Stage1Config{};
  cfg.stage2 = Stage2Config{};
  return cfg;
}

// Sized so the full ablation grid runs on one desktop core in minutes. The
// short flat-rate stage 1 stops while validation is still climbing, leaving
// the refinement stage real signal to harvest from the unlabeled pool; the
// stage-2 rate and momentum keep the teacher an average over the whole run.
TrainConfig TrainConfig::desk_defaults() {
  TrainConfig cfg;
  cfg.encoder.d_model = 16;
  cfg.encoder.n_heads = 2;
  cfg.encoder.layers_token = 1;
  cfg.encoder.layers_report = 1;
  cfg.encoder.max_tokens = 12;
  cfg.encoder.max_sequences = 8;
  cfg.encoder.dropout = 0.15;
  cfg.stage1.epochs = 8;
  cfg.stage1.batch = 48;
  cfg.stage1.peak_lr = 3e-3;
  cfg.stage1.floor_lr = 3e-3;  // flat after warmup
  cfg.stage2.generations = 12;
  cfg.stage2.batch = 128;
  cfg.stage2.lr = 1.4e-3;
  cfg.stage2.alpha = 0.993;
  cfg.stage2.sigma = 2.0;
  cfg.stage2.warm_start_adam = true;
  return cfg;
}

void TrainConfig::validate() const {
  if (stage1.epochs < 0 || stage2.generations < 0) throw Error("config: epochs must be >= 0");
  if (stage1.batch < 1 || stage2.batch < 1) throw Error("config: batch must be >= 1");
  if (stage1.peak_lr <= 0 || stage1.floor_lr <= 0 || stage2.lr <= 0) {
    throw Error("config: learning rates must be positive");
  }
  if (stage2.alpha < 0.0 || stage2.alpha > 1.0) throw Error("config: alpha outside [0,1]");
  if (stage2.beta < 0.0 || stage2.beta > 1.0) throw Error("config: beta outside [0,1]");
  if (stage2.sigma <= 0.0) throw Error("config: sigma must be positive");
  if (encoder.dropout < 0.0 || encoder.dropout >= 1.0) throw Error("config: dropout outside [0,1)");
}

namespace {

template <typename T>
T parse_value(const std::string& value);

template <>
int parse_value<int>(const std::string& v) { return std::stoi(v); }
template <>
std::int64_t parse_value<std::int64_t>(const std::string& v) { return std::stoll(v); }
template <>
std::uint64_t parse_value<std::uint64_t>(const std::string& v) { return std::stoull(v); }
template <>
double parse_value<double>(const std::string& v) { return std::stod(v); }
template <>
bool parse_value<bool>(const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw Error("config: boolean value expected, got " + v);
}
template <>
std::string parse_value<std::string>(const std::string& v) { return v; }

}  // namespace

void apply_config_override(TrainConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "seed") cfg.seed = parse_value<std::uint64_t>(value);
    else if (key == "vocab_limit") cfg.vocab_limit = parse_value<int>(value);
    else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
    else if (key == "encoder.d_model") cfg.encoder.d_model = parse_value<int>(value);
    else if (key == "encoder.n_heads") cfg.encoder.n_heads = parse_value<int>(value);
    else if (key == "encoder.layers_token") cfg.encoder.layers_token = parse_value<int>(value);
    else if (key == "encoder.layers_report") cfg.encoder.layers_report = parse_value<int>(value);
    else if (key == "encoder.max_tokens") cfg.encoder.max_tokens = parse_value<int>(value);
    else if (key == "encoder.max_sequences") cfg.encoder.max_sequences = parse_value<int>(value);
    else if (key == "encoder.use_emotion") cfg.encoder.use_emotion = parse_value<bool>(value);
    else if (key == "encoder.finetune_embeddings") cfg.encoder.finetune_embeddings = parse_value<bool>(value);
    else if (key == "encoder.dropout") cfg.encoder.dropout = parse_value<double>(value);
    else if (key == "adam.beta1") cfg.adam.beta1 = parse_value<double>(value);
    else if (key == "adam.beta2") cfg.adam.beta2 = parse_value<double>(value);
    else if (key == "adam.eps") cfg.adam.eps = parse_value<double>(value);
    else if (key == "stage1.epochs") cfg.stage1.epochs = parse_value<int>(value);
    else if (key == "stage1.batch") cfg.stage1.batch = parse_value<int>(value);
    else if (key == "stage1.warmup_iters") cfg.stage1.warmup_iters = parse_value<std::int64_t>(value);
    else if (key == "stage1.peak_lr") cfg.stage1.peak_lr = parse_value<double>(value);
    else if (key == "stage1.floor_lr") cfg.stage1.floor_lr = parse_value<double>(value);
    else if (key == "stage1.eval_every") cfg.stage1.eval_every = parse_value<int>(value);
    else if (key == "stage1.clip_norm") cfg.stage1.clip_norm = parse_value<double>(value);
    else if (key == "stage1.stop_after_epochs") cfg.stage1.stop_after_epochs = parse_value<int>(value);
    else if (key == "stage2.generations") cfg.stage2.generations = parse_value<int>(value);
    else if (key == "stage2.batch") cfg.stage2.batch = parse_value<int>(value);
    else if (key == "stage2.lr") cfg.stage2.lr = parse_value<double>(value);
    else if (key == "stage2.alpha") cfg.stage2.alpha = parse_value<double>(value);
    else if (key == "stage2.beta") cfg.stage2.beta = parse_value<double>(value);
    else if (key == "stage2.sigma") cfg.stage2.sigma = parse_value<double>(value);
    else if (key == "stage2.use_lp") cfg.stage2.use_lp = parse_value<bool>(value);
    else if (key == "stage2.use_lr") cfg.stage2.use_lr = parse_value<bool>(value);
    else if (key == "stage2.clip_norm") cfg.stage2.clip_norm = parse_value<double>(value);
    else if (key == "stage2.stop_after_generations") cfg.stage2.stop_after_generations = parse_value<int>(value);
    else if (key == "stage2.warm_start_adam") cfg.stage2.warm_start_adam = parse_value<bool>(value);
    else throw Error("config: unknown key " + key);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error("config: bad value for " + key + ": " + value);
  }
}

TrainConfig parse_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  TrainConfig cfg = TrainConfig::paper_defaults();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config: expected key=value at line " + std::to_string(line_no));
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_config_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::vector<const EncodedSample*> Pipeline::pointers_of(const std::vector<std::size_t>& idx) const {
  std::vector<const EncodedSample*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&encoded[i]);
  return out;
}

Pipeline build_pipeline(const Corpus& corpus, EmotionLexicon lexicon, const TrainConfig& cfg,
                        const std::optional<std::string>& embeddings_path) {
  Pipeline pipe;
  pipe.corpus = &corpus;
  pipe.lexicon = std::move(lexicon);
  if (embeddings_path) {
    pipe.vocab = load_embeddings(*embeddings_path, cfg.vocab_limit);
  } else {
    pipe.vocab = build_vocab(corpus, cfg.encoder.d_model, cfg.vocab_limit, cfg.seed);
  }
  EncodeLimits limits{cfg.encoder.max_tokens, cfg.encoder.max_sequences};
  pipe.encoded = encode_corpus(corpus, pipe.vocab, pipe.lexicon, limits);
  pipe.train_idx = corpus.indices_of(Split::kTrain);
  pipe.val_idx = corpus.indices_of(Split::kVal);
  pipe.test_idx = corpus.indices_of(Split::kTest);
  pipe.unlabeled_idx = corpus.indices_of(Split::kUnlabeled);
  return pipe;
}

MetricsReport evaluate_split(const EncoderParams& params, const Pipeline& pipe,
                             const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw Error("evaluate_split: empty split");
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(idx.size());
  labels.reserve(idx.size());
  for (std::size_t i : idx) {
    const Sample& s = pipe.corpus->samples[i];
    if (!s.gold_label) throw Error("evaluate_split: sample " + s.id + " has no gold label");
    scores.push_back(forward(pipe.encoded[i], params).p);
    labels.push_back(*s.gold_label);
  }
  return compute_metrics(scores, labels);
}

namespace {

ordered_json encoder_to_json(const EncoderConfig& e) {
  return ordered_json{{"d_model", e.d_model},
                      {"n_heads", e.n_heads},
                      {"layers_token", e.layers_token},
                      {"layers_report", e.layers_report},
                      {"max_tokens", e.max_tokens},
                      {"max_sequences", e.max_sequences},
                      {"use_emotion", e.use_emotion},
                      {"finetune_embeddings", e.finetune_embeddings},
                      {"dropout", e.dropout}};
}

std::string meta_to_json(const TrainConfig& cfg, const Vocab& vocab,
                         const EmotionLexicon& lexicon, int stage) {
  ordered_json j;
  j["stage"] = stage;
  j["encoder"] = encoder_to_json(cfg.encoder);
  j["adam"] = {{"beta1", cfg.adam.beta1}, {"beta2", cfg.adam.beta2}, {"eps", cfg.adam.eps}};
  j["stage1"] = {{"epochs", cfg.stage1.epochs},
                 {"batch", cfg.stage1.batch},
                 {"warmup_iters", cfg.stage1.warmup_iters},
                 {"peak_lr", cfg.stage1.peak_lr},
                 {"floor_lr", cfg.stage1.floor_lr},
                 {"eval_every", cfg.stage1.eval_every},
                 {"clip_norm", cfg.stage1.clip_norm}};
  j["stage2"] = {{"generations", cfg.stage2.generations},
                 {"batch", cfg.stage2.batch},
                 {"lr", cfg.stage2.lr},
                 {"alpha", cfg.stage2.alpha},
                 {"beta", cfg.stage2.beta},
                 {"sigma", cfg.stage2.sigma},
                 {"use_lp", cfg.stage2.use_lp},
                 {"use_lr", cfg.stage2.use_lr},
                 {"clip_norm", cfg.stage2.clip_norm},
                 {"warm_start_adam", cfg.stage2.warm_start_adam}};
  j["seed"] = cfg.seed;
  j["vocab_limit"] = cfg.vocab_limit;
  j["checkpoint_dir"] = cfg.checkpoint_dir;
  j["vocab"] = vocab.tokens();
  json lex_rows = json::array();
  for (const auto& [token, e] : lexicon.sorted_entries()) {
    lex_rows.push_back({token, e.category, e.intensity, e.polarity});
  }
  j["lexicon"] = lex_rows;
  return j.dump();
}

/// Exactly B labeled indices per call; reshuffles the pool when exhausted.
class LabeledCycle {
 public:
  LabeledCycle(std::vector<std::size_t> pool, Rng& rng) : pool_(std::move(pool)), rng_(rng) {
    rng_.shuffle(pool_);
  }
  std::vector<std::size_t> next(int count) {
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      if (pos_ == pool_.size()) {
        rng_.shuffle(pool_);
        pos_ = 0;
      }
      out.push_back(pool_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> pool_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

}  // namespace

Stage1Result train_stage1(const Pipeline& pipe, const TrainConfig& cfg, const Checkpoint* resume) {
  cfg.validate();
  if (pipe.train_idx.empty()) throw Error("train_stage1: labeled train split is empty");
  if (pipe.val_idx.empty()) throw Error("train_stage1: validation split is empty");

  EncoderParams params = init_params(cfg.encoder, pipe.vocab, cfg.seed);
  AdamState adam = AdamState::zeros(params.store.size());
  Rng rng(cfg.seed ^ kTrainSeedSalt);
  Vec best_params = params.store.flat();
  double best_val = -1.0;
  int start_epoch = 0;

  if (resume != nullptr) {
    if (resume->stage != 1) throw Error("train_stage1: checkpoint is not a stage-1 checkpoint");
    if (resume->params.size() != params.store.size()) {
      throw Error("train_stage1: checkpoint layout does not match this configuration");
    }
    params.store.flat() = resume->params;
    best_params = resume->best_params;
    best_val = resume->best_val;
    adam.m = resume->adam_m;
    adam.v = resume->adam_v;
    adam.step = resume->adam_step;
    rng.restore_state(resume->rng_state);
    start_epoch = resume->epochs_done;
  }

  const int n_train = static_cast<int>(pipe.train_idx.size());
  const int steps_per_epoch = (n_train + cfg.stage1.batch - 1) / cfg.stage1.batch;
  const std::int64_t total_iters =
      static_cast<std::int64_t>(cfg.stage1.epochs) * steps_per_epoch;
  LrSchedule schedule = LrSchedule::for_run(cfg.stage1.warmup_iters, total_iters,
                                            cfg.stage1.peak_lr, cfg.stage1.floor_lr);

  const int last_epoch = cfg.stage1.stop_after_epochs > 0
                             ? std::min(cfg.stage1.stop_after_epochs, cfg.stage1.epochs)
                             : cfg.stage1.epochs;

  Stage1Result result;
  Vec grad = Vec::Zero(params.store.size());

  for (int epoch = start_epoch + 1; epoch <= last_epoch; ++epoch) {
    std::vector<std::size_t> order = pipe.train_idx;
    rng.shuffle(order);

    double epoch_loss = 0.0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      const std::size_t begin = static_cast<std::size_t>(step) * cfg.stage1.batch;
      const std::size_t end = std::min(order.size(), begin + cfg.stage1.batch);
      const double batch_size = static_cast<double>(end - begin);

      grad.setZero();
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx = order[k];
        const Sample& sample = pipe.corpus->samples[idx];
        const double y = static_cast<double>(*sample.gold_label);
        ForwardTrace trace = forward(pipe.encoded[idx], params, &rng);
        batch_loss += bce_loss(trace.p, y);
        backward(trace, pipe.encoded[idx], params, bce_grad(trace.p, y) / batch_size, grad);
      }
      batch_loss /= batch_size;
      epoch_loss += batch_loss;

      if (cfg.stage1.clip_norm > 0.0) clip_global_norm(grad, cfg.stage1.clip_norm);
      adam_step(params.store.flat(), grad, adam, schedule.lr(adam.step + 1), cfg.adam,
                &params.store);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / steps_per_epoch;
    if (epoch % cfg.stage1.eval_every == 0 || epoch == last_epoch) {
      const MetricsReport val = evaluate_split(params, pipe, pipe.val_idx);
      log.val_accuracy = val.accuracy;
      if (val.accuracy > best_val) {
        best_val = val.accuracy;
        best_params = params.store.flat();
      }
    }
    result.log.push_back(log);
  }

  Checkpoint& ckpt = result.checkpoint;
  ckpt.stage = 1;
  ckpt.meta_json = meta_to_json(cfg, pipe.vocab, pipe.lexicon, 1);
  ckpt.params = params.store.flat();
  ckpt.best_params = best_params;
  ckpt.adam_m = adam.m;
  ckpt.adam_v = adam.v;
  ckpt.adam_step = adam.step;
  ckpt.epochs_done = last_epoch;
  ckpt.best_val = best_val;
  ckpt.rng_state = rng.save_state();
  return result;
}

Stage2Result train_stage2(const Pipeline& pipe, const Checkpoint& stage1, const TrainConfig& cfg,
                          const HiddenLabels* hidden, const Checkpoint* resume) {
  cfg.validate();
  if (pipe.train_idx.empty()) throw Error("train_stage2: labeled train split is empty");
  if (pipe.val_idx.empty()) throw Error("train_stage2: validation split is empty");
  if (pipe.unlabeled_idx.empty()) throw Error("train_stage2: unlabeled split is empty");

  TeacherStudent ts;
  ts.student = init_params(cfg.encoder, pipe.vocab, cfg.seed);
  if (stage1.best_params.size() != ts.student.store.size()) {
    throw Error("train_stage2: stage-1 checkpoint does not match this configuration");
  }
  ts.student.store.flat() = stage1.best_params;
  ts.teacher = ts.student;
  ts.alpha = cfg.stage2.alpha;

  AdamState adam = AdamState::zeros(ts.student.store.size());
  if (cfg.stage2.warm_start_adam && stage1.adam_m.size() == adam.m.size()) {
    adam.m = stage1.adam_m;
    adam.v = stage1.adam_v;
    adam.step = stage1.adam_step;
  }
  Rng rng(cfg.seed ^ kStage2SeedSalt);
  Vec best_teacher = ts.teacher.store.flat();
  double best_val = -1.0;
  int start_gen = 0;

  if (resume != nullptr) {
    if (resume->stage != 2) throw Error("train_stage2: checkpoint is not a stage-2 checkpoint");
    if (resume->params.size() != ts.student.store.size()) {
      throw Error("train_stage2: checkpoint layout does not match this configuration");
    }
    ts.student.store.flat() = resume->params;
    ts.teacher.store.flat() = resume->teacher_params;
    best_teacher = resume->best_params;
    best_val = resume->best_val;
    adam.m = resume->adam_m;
    adam.v = resume->adam_v;
    adam.step = resume->adam_step;
    rng.restore_state(resume->rng_state);
    start_gen = resume->epochs_done;
  }

  const std::vector<const EncodedSample*> unlabeled = pipe.pointers_of(pipe.unlabeled_idx);
  const int batch = cfg.stage2.batch;
  const int n_unlabeled = static_cast<int>(unlabeled.size());
  const int steps_per_gen = (n_unlabeled + batch - 1) / batch;

  Stage2Result result;

  // The freshly initialized teacher is a selection candidate too; a stage-2
  // run can never ship a model worse on validation than its own stage-1 init.
  if (start_gen == 0) {
    const MetricsReport val = evaluate_split(ts.teacher, pipe, pipe.val_idx);
    if (val.accuracy > best_val) {
      best_val = val.accuracy;
      best_teacher = ts.teacher.store.flat();
    }
  }

  GenerationOptions opts;
  opts.use_label_propagation = cfg.stage2.use_lp;
  opts.use_label_reliability = cfg.stage2.use_lr;
  opts.propagation_rate = cfg.stage2.beta;
  opts.mmd_sigma = cfg.stage2.sigma;

  const int last_gen = cfg.stage2.stop_after_generations > 0
                           ? std::min(cfg.stage2.stop_after_generations, cfg.stage2.generations)
                           : cfg.stage2.generations;

  Vec grad = Vec::Zero(ts.student.store.size());

  for (int gen = start_gen + 1; gen <= last_gen; ++gen) {
    double loss_labeled_sum = 0.0;
    double loss_unlabeled_sum = 0.0;

    auto train_epoch = [&](const WeakLabelState& state) {
      std::vector<std::size_t> unlabeled_order(static_cast<std::size_t>(n_unlabeled));
      for (std::size_t i = 0; i < unlabeled_order.size(); ++i) unlabeled_order[i] = i;
      rng.shuffle(unlabeled_order);
      LabeledCycle labeled_cycle(pipe.train_idx, rng);

      for (int step = 0; step < steps_per_gen; ++step) {
        const std::size_t u_begin = static_cast<std::size_t>(step) * batch;
        const std::size_t u_end = std::min(unlabeled_order.size(), u_begin + batch);
        const std::vector<std::size_t> labeled_batch = labeled_cycle.next(batch);

        grad.setZero();
        double loss_l = 0.0;
        const double bl = static_cast<double>(labeled_batch.size());
        for (std::size_t idx : labeled_batch) {
          const Sample& sample = pipe.corpus->samples[idx];
          const double y = static_cast<double>(*sample.gold_label);
          ForwardTrace trace = forward(pipe.encoded[idx], ts.student, &rng);
          loss_l += bce_loss(trace.p, y);
          backward(trace, pipe.encoded[idx], ts.student, bce_grad(trace.p, y) / bl, grad);
        }
        loss_l /= bl;

        double loss_u = 0.0;
        const double bu = static_cast<double>(u_end - u_begin);
        for (std::size_t k = u_begin; k < u_end; ++k) {
          const std::size_t j = unlabeled_order[k];
          const EncodedSample& enc = *unlabeled[j];
          const double y = state.y_u[static_cast<Eigen::Index>(j)];
          const double w = state.omega[static_cast<Eigen::Index>(j)];
          ForwardTrace trace = forward(enc, ts.student, &rng);
          loss_u += w * bce_loss(trace.p, y);
          backward(trace, enc, ts.student, w * bce_grad(trace.p, y) / bu, grad);
        }
        loss_u /= bu;

        if (cfg.stage2.clip_norm > 0.0) clip_global_norm(grad, cfg.stage2.clip_norm);
        adam_step(ts.student.store.flat(), grad, adam, cfg.stage2.lr, cfg.adam,
                  &ts.student.store);
        ema_update(ts);

        loss_labeled_sum += loss_l;
        loss_unlabeled_sum += loss_u;
      }
    };

    const WeakLabelState state = generation_step(ts, unlabeled, opts, train_epoch);

    GenerationLog log;
    log.generation = gen;
    const LabelSimilarityMatrix c = label_similarity(state.hard_student, state.hard_teacher);
    log.c_raw = c.raw;
    log.c_normalized = c.normalized;
    log.mean_omega = state.omega.mean();
    log.loss_labeled = loss_labeled_sum / steps_per_gen;
    log.loss_unlabeled = loss_unlabeled_sum / steps_per_gen;
    if (hidden != nullptr) {
      std::size_t agree = 0;
      for (std::size_t j = 0; j < pipe.unlabeled_idx.size(); ++j) {
        const Sample& s = pipe.corpus->samples[pipe.unlabeled_idx[j]];
        const auto it = hidden->find(s.id);
        if (it == hidden->end()) continue;
        const int hard = state.y_u[static_cast<Eigen::Index>(j)] >= 0.5 ? 1 : 0;
        if (hard == it->second) ++agree;
      }
      log.weak_label_accuracy =
          static_cast<double>(agree) / static_cast<double>(pipe.unlabeled_idx.size());
    }

    const MetricsReport val = evaluate_split(ts.teacher, pipe, pipe.val_idx);
    log.val_accuracy = val.accuracy;
    if (val.accuracy > best_val) {
      best_val = val.accuracy;
      best_teacher = ts.teacher.store.flat();
    }
    result.log.push_back(log);
  }

  Checkpoint& ckpt = result.checkpoint;
  ckpt.stage = 2;
  ckpt.meta_json = meta_to_json(cfg, pipe.vocab, pipe.lexicon, 2);
  ckpt.params = ts.student.store.flat();
  ckpt.teacher_params = ts.teacher.store.flat();
  ckpt.best_params = best_teacher;
  ckpt.adam_m = adam.m;
  ckpt.adam_v = adam.v;
  ckpt.adam_step = adam.step;
  ckpt.epochs_done = last_gen;
  ckpt.best_val = best_val;
  ckpt.rng_state = rng.save_state();
  return result;
}

TrainConfig config_from_checkpoint(const Checkpoint& ckpt) {
  json j;
  try {
    j = json::parse(ckpt.meta_json);
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: bad config echo: ") + e.what());
  }
  TrainConfig cfg;
  const auto& e = j.at("encoder");
  cfg.encoder.d_model = e.at("d_model").get<int>();
  cfg.encoder.n_heads = e.at("n_heads").get<int>();
  cfg.encoder.layers_token = e.at("layers_token").get<int>();
  cfg.encoder.layers_report = e.at("layers_report").get<int>();
  cfg.encoder.max_tokens = e.at("max_tokens").get<int>();
  cfg.encoder.max_sequences = e.at("max_sequences").get<int>();
  cfg.encoder.use_emotion = e.at("use_emotion").get<bool>();
  cfg.encoder.finetune_embeddings = e.at("finetune_embeddings").get<bool>();
  cfg.encoder.dropout = e.at("dropout").get<double>();
  const auto& a = j.at("adam");
  cfg.adam.beta1 = a.at("beta1").get<double>();
  cfg.adam.beta2 = a.at("beta2").get<double>();
  cfg.adam.eps = a.at("eps").get<double>();
  const auto& s1 = j.at("stage1");
  cfg.stage1.epochs = s1.at("epochs").get<int>();
  cfg.stage1.batch = s1.at("batch").get<int>();
  cfg.stage1.warmup_iters = s1.at("warmup_iters").get<std::int64_t>();
  cfg.stage1.peak_lr = s1.at("peak_lr").get<double>();
  cfg.stage1.floor_lr = s1.at("floor_lr").get<double>();
  cfg.stage1.eval_every = s1.at("eval_every").get<int>();
  cfg.stage1.clip_norm = s1.at("clip_norm").get<double>();
  const auto& s2 = j.at("stage2");
  cfg.stage2.generations = s2.at("generations").get<int>();
  cfg.stage2.batch = s2.at("batch").get<int>();
  cfg.stage2.lr = s2.at("lr").get<double>();
  cfg.stage2.alpha = s2.at("alpha").get<double>();
  cfg.stage2.beta = s2.at("beta").get<double>();
  cfg.stage2.sigma = s2.at("sigma").get<double>();
  cfg.stage2.use_lp = s2.at("use_lp").get<bool>();
  cfg.stage2.use_lr = s2.at("use_lr").get<bool>();
  cfg.stage2.clip_norm = s2.at("clip_norm").get<double>();
  cfg.stage2.warm_start_adam = s2.value("warm_start_adam", false);
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.vocab_limit = j.at("vocab_limit").get<int>();
  cfg.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
  return cfg;
}

std::pair<EncoderParams, Vocab> encoder_from_checkpoint(const Checkpoint& ckpt,
                                                        const std::string& which) {
  const TrainConfig cfg = config_from_checkpoint(ckpt);
  const json j = json::parse(ckpt.meta_json);
  std::vector<std::string> tokens = j.at("vocab").get<std::vector<std::string>>();

  const Vec* flat = nullptr;
  if (which == "params") flat = &ckpt.params;
  else if (which == "best") flat = &ckpt.best_params;
  else if (which == "teacher") flat = &ckpt.teacher_params;
  else throw Error("encoder_from_checkpoint: which must be params|best|teacher");
  if (flat->size() == 0) throw Error("encoder_from_checkpoint: requested tensor set is empty");

  const Eigen::Index n_tokens = static_cast<Eigen::Index>(tokens.size());
  // The embedding tensor sits at flat offset 0 (n_tokens x d_model).
  if (flat->size() < n_tokens * cfg.encoder.d_model) {
    throw Error("encoder_from_checkpoint: parameter vector too small for vocab");
  }
  Mat emb = Eigen::Map<const Mat>(flat->data(), n_tokens, cfg.encoder.d_model);
  Vocab vocab = Vocab::from_tokens(std::move(tokens), std::move(emb));

  EncoderParams params = init_params(cfg.encoder, vocab, 0);
  if (params.store.size() != flat->size()) {
    throw Error("encoder_from_checkpoint: layout mismatch with stored parameters");
  }
  params.store.flat() = *flat;
  return {std::move(params), std::move(vocab)};
}

void write_generation_diagnostics(const std::vector<GenerationLog>& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (const GenerationLog& g : log) {
    ordered_json row;
    row["generation"] = g.generation;
    row["c_raw"] = {{g.c_raw(0, 0), g.c_raw(0, 1)}, {g.c_raw(1, 0), g.c_raw(1, 1)}};
    row["c_normalized"] = {{g.c_normalized(0, 0), g.c_normalized(0, 1)},
                           {g.c_normalized(1, 0), g.c_normalized(1, 1)}};
    row["mean_omega"] = g.mean_omega;
    if (g.weak_label_accuracy) row["weak_label_accuracy"] = *g.weak_label_accuracy;
    else row["weak_label_accuracy"] = nullptr;
    row["loss_labeled"] = g.loss_labeled;
    row["loss_unlabeled"] = g.loss_unlabeled;
    row["val_accuracy"] = g.val_accuracy;
    out << row.dump() << '\n';
  }
}

void write_epoch_metrics(const std::vector<EpochLog>& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (const EpochLog& e : log) {
    ordered_json row;
    row["epoch"] = e.epoch;
    row["train_loss"] = e.train_loss;
    if (e.val_accuracy) row["val_accuracy"] = *e.val_accuracy;
    else row["val_accuracy"] = nullptr;
    out << row.dump() << '\n';
  }
}

}  // namespace lnmt
