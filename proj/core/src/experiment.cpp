#include "lnmt/experiment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"

namespace lnmt {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

// Published reference results for the full-scale evaluation; informational
// only, the desk-scale corpora cannot reproduce them.
constexpr double kReferenceAccuracy = 82.6;
constexpr double kReferenceAuc = 87.1;

const std::map<std::string, double>& reference_accuracy_by_variant() {
  static const std::map<std::string, double> kRef = {
      {"stage1", 78.7}, {"mt", 79.5}, {"mt_lp", 80.8}, {"mt_lp_lr", 82.6},
      {"stage1_no_emotion", 77.4},
  };
  return kRef;
}

EncoderParams params_with_flat(const TrainConfig& cfg, const Vocab& vocab, const Vec& flat) {
  EncoderParams p = init_params(cfg.encoder, vocab, 0);
  if (p.store.size() != flat.size()) {
    throw Error("experiment: parameter layout mismatch");
  }
  p.store.flat() = flat;
  return p;
}

std::uint64_t fnv1a_append(std::uint64_t h, const std::string& bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::uint64_t corpus_hash(const Corpus& corpus) {
  std::uint64_t h = 1469598103934665603ull;
  for (const Sample& s : corpus.samples) {
    ordered_json obj;
    obj["id"] = s.id;
    obj["article"] = s.article;
    json reports = json::array();
    for (const Report& r : s.reports) reports.push_back(r.text);
    obj["reports"] = reports;
    if (s.gold_label) obj["label"] = *s.gold_label;
    obj["split"] = split_name(s.split);
    h = fnv1a_append(h, obj.dump());
    h = fnv1a_append(h, "\n");
  }
  return h;
}

EmotionLexicon lexicon_from_checkpoint(const Checkpoint& ckpt) {
  json j;
  try {
    j = json::parse(ckpt.meta_json);
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: bad config echo: ") + e.what());
  }
  EmotionLexicon lex;
  for (const auto& row : j.at("lexicon")) {
    lex.add(row.at(0).get<std::string>(), row.at(1).get<int>(), row.at(2).get<double>(),
            row.at(3).get<double>());
  }
  return lex;
}

MetricsReport evaluate_checkpoint(const Checkpoint& ckpt, const Corpus& corpus,
                                  const EmotionLexicon& lexicon, Split split,
                                  const std::string& which) {
  auto [params, vocab] = encoder_from_checkpoint(ckpt, which);
  const EncodeLimits limits{params.cfg.max_tokens, params.cfg.max_sequences};

  std::vector<double> scores;
  std::vector<int> labels;
  for (const Sample& s : corpus.samples) {
    if (s.split != split) continue;
    if (!s.gold_label) throw Error("evaluate_checkpoint: sample " + s.id + " has no gold label");
    const EncodedSample enc = encode_sample(s, vocab, lexicon, limits);
    scores.push_back(forward(enc, params).p);
    labels.push_back(*s.gold_label);
  }
  if (scores.empty()) {
    throw Error(std::string("evaluate_checkpoint: split ") + split_name(split) + " is empty");
  }
  return compute_metrics(scores, labels);
}

std::string metrics_with_reference(const MetricsReport& report) {
  ordered_json j = ordered_json::parse(report.to_json());
  j["reference"] = {
      {"published_accuracy", kReferenceAccuracy},
      {"published_auc_roc", kReferenceAuc},
      {"note", "full-scale reference results; informational, not a desk-scale target"},
  };
  return j.dump(2);
}

std::vector<std::pair<std::string, double>> annotate_corpus(const Checkpoint& ckpt,
                                                            const Corpus& corpus,
                                                            const EmotionLexicon& lexicon,
                                                            const std::string& which) {
  auto [params, vocab] = encoder_from_checkpoint(ckpt, which);
  const EncodeLimits limits{params.cfg.max_tokens, params.cfg.max_sequences};

  const bool has_unlabeled = corpus.count_of(Split::kUnlabeled) > 0;
  std::vector<std::pair<std::string, double>> rows;
  for (const Sample& s : corpus.samples) {
    if (has_unlabeled && s.split != Split::kUnlabeled) continue;
    const EncodedSample enc = encode_sample(s, vocab, lexicon, limits);
    rows.emplace_back(s.id, forward(enc, params).p);
  }
  return rows;
}

void write_weak_labels(const std::vector<std::pair<std::string, double>>& rows,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (const auto& [id, y] : rows) {
    ordered_json obj;
    obj["id"] = id;
    obj["y_u"] = y;
    out << obj.dump() << '\n';
  }
}

std::map<std::string, std::pair<double, double>> RunManifest::accuracy_aggregate() const {
  std::map<std::string, std::vector<double>> values;
  for (const SeedRun& run : runs) {
    for (const auto& [name, v] : run.variants) values[name].push_back(v.test_accuracy);
  }
  std::map<std::string, std::pair<double, double>> out;
  for (const auto& [name, xs] : values) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double stddev = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    out[name] = {mean, stddev};
  }
  return out;
}

std::string RunManifest::to_json() const {
  ordered_json j;
  j["config"] = json::parse(config_echo);
  j["seeds"] = seeds;
  ordered_json runs_json = ordered_json::array();
  for (const SeedRun& run : runs) {
    ordered_json r;
    r["seed"] = run.seed;
    r["corpus_fingerprint"] = run.corpus_fingerprint;
    ordered_json variants;
    for (const auto& [name, v] : run.variants) {
      ordered_json vj;
      vj["test_accuracy"] = v.test_accuracy;
      if (v.test_auc) vj["test_auc"] = *v.test_auc;
      else vj["test_auc"] = nullptr;
      if (!v.weak_label_curve.empty()) vj["weak_label_curve"] = v.weak_label_curve;
      variants[name] = vj;
    }
    r["variants"] = variants;
    runs_json.push_back(r);
  }
  j["runs"] = runs_json;
  ordered_json agg;
  for (const auto& [name, ms] : accuracy_aggregate()) {
    agg[name] = {{"mean", ms.first}, {"stddev", ms.second}};
  }
  j["aggregate_accuracy"] = agg;
  ordered_json ref;
  for (const auto& [name, acc] : reference_accuracy_by_variant()) ref[name] = acc;
  j["reference_accuracy"] = ref;
  j["reference_note"] = "published full-scale accuracies per variant; informational only";
  return j.dump(2);
}

RunManifest run_ablation_suite(const AblationSpec& spec) {
  if (spec.seeds.size() < 3) throw Error("run_ablation_suite: need at least 3 seeds");
  spec.train_cfg.validate();

  RunManifest manifest;
  manifest.seeds = spec.seeds;
  {
    ordered_json echo;
    echo["corpus"] = {{"n_labeled", spec.corpus_cfg.n_labeled},
                      {"n_unlabeled", spec.corpus_cfg.n_unlabeled},
                      {"n_val", spec.corpus_cfg.n_val},
                      {"n_test", spec.corpus_cfg.n_test},
                      {"vocab_size", spec.corpus_cfg.vocab_size},
                      {"p_sig", spec.corpus_cfg.p_sig},
                      {"weak_noise", spec.corpus_cfg.weak_noise}};
    echo["train_seed_equals_corpus_seed"] = true;
    echo["stage1_epochs"] = spec.train_cfg.stage1.epochs;
    echo["stage2_generations"] = spec.train_cfg.stage2.generations;
    echo["d_model"] = spec.train_cfg.encoder.d_model;
    manifest.config_echo = echo.dump();
  }

  for (std::uint64_t seed : spec.seeds) {
    SynthConfig scfg = spec.corpus_cfg;
    scfg.seed = seed;
    const SynthResult synth = generate_synthetic(scfg);

    TrainConfig tcfg = spec.train_cfg;
    tcfg.seed = seed;

    SeedRun run;
    run.seed = seed;
    run.corpus_fingerprint = corpus_hash(synth.corpus);

    const Pipeline pipe = build_pipeline(synth.corpus, synth.lexicon, tcfg);

    const Stage1Result stage1 = train_stage1(pipe, tcfg);
    {
      const EncoderParams best =
          params_with_flat(tcfg, pipe.vocab, stage1.checkpoint.best_params);
      const MetricsReport m = evaluate_split(best, pipe, pipe.test_idx);
      run.variants["stage1"] = VariantResult{m.accuracy, m.auc_roc, {}};
    }

    {
      TrainConfig ne = tcfg;
      ne.encoder.use_emotion = false;
      const Stage1Result no_emotion = train_stage1(pipe, ne);
      const EncoderParams best =
          params_with_flat(ne, pipe.vocab, no_emotion.checkpoint.best_params);
      const MetricsReport m = evaluate_split(best, pipe, pipe.test_idx);
      run.variants["stage1_no_emotion"] = VariantResult{m.accuracy, m.auc_roc, {}};
    }

    const struct {
      const char* name;
      bool lp, lr;
    } variants[] = {{"mt", false, false}, {"mt_lp", true, false}, {"mt_lp_lr", true, true}};
    for (const auto& v : variants) {
      TrainConfig vcfg = tcfg;
      vcfg.stage2.use_lp = v.lp;
      vcfg.stage2.use_lr = v.lr;
      const Stage2Result stage2 = train_stage2(pipe, stage1.checkpoint, vcfg, &synth.hidden);
      const EncoderParams best =
          params_with_flat(vcfg, pipe.vocab, stage2.checkpoint.best_params);
      const MetricsReport m = evaluate_split(best, pipe, pipe.test_idx);
      VariantResult result{m.accuracy, m.auc_roc, {}};
      for (const GenerationLog& g : stage2.log) {
        if (g.weak_label_accuracy) result.weak_label_curve.push_back(*g.weak_label_accuracy);
      }
      run.variants[v.name] = result;
    }

    manifest.runs.push_back(std::move(run));
  }
  return manifest;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  auto values_or = [](const std::vector<double>& xs, double fallback) {
    return xs.empty() ? std::vector<double>{fallback} : xs;
  };
  const auto alphas = values_or(spec.alphas, spec.train_cfg.stage2.alpha);
  const auto betas = values_or(spec.betas, spec.train_cfg.stage2.beta);
  const auto sigmas = values_or(spec.sigmas, spec.train_cfg.stage2.sigma);
  const auto p_sigs = values_or(spec.p_sigs, spec.corpus_cfg.p_sig);
  const auto noises = values_or(spec.weak_noises, spec.corpus_cfg.weak_noise);

  std::vector<SweepRow> rows;
  for (double p_sig : p_sigs) {
    for (double noise : noises) {
      SynthConfig scfg = spec.corpus_cfg;
      scfg.p_sig = p_sig;
      scfg.weak_noise = noise;
      scfg.seed = spec.seed;
      const SynthResult synth = generate_synthetic(scfg);

      TrainConfig base = spec.train_cfg;
      base.seed = spec.seed;
      const Pipeline pipe = build_pipeline(synth.corpus, synth.lexicon, base);
      const Stage1Result stage1 = train_stage1(pipe, base);

      for (double alpha : alphas) {
        for (double beta : betas) {
          for (double sigma : sigmas) {
            TrainConfig cfg = base;
            cfg.stage2.alpha = alpha;
            cfg.stage2.beta = beta;
            cfg.stage2.sigma = sigma;
            const Stage2Result stage2 = train_stage2(pipe, stage1.checkpoint, cfg, &synth.hidden);
            const EncoderParams best =
                params_with_flat(cfg, pipe.vocab, stage2.checkpoint.best_params);
            const MetricsReport m = evaluate_split(best, pipe, pipe.test_idx);
            rows.push_back(SweepRow{alpha, beta, sigma, p_sig, noise, m.accuracy, m.auc_roc});
          }
        }
      }
    }
  }
  return rows;
}

std::string sweep_to_json(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  ordered_json j;
  j["seed"] = spec.seed;
  ordered_json arr = ordered_json::array();
  for (const SweepRow& r : rows) {
    ordered_json row;
    row["alpha"] = r.alpha;
    row["beta"] = r.beta;
    row["sigma"] = r.sigma;
    row["p_sig"] = r.p_sig;
    row["weak_noise"] = r.weak_noise;
    row["test_accuracy"] = r.test_accuracy;
    if (r.test_auc) row["test_auc"] = *r.test_auc;
    else row["test_auc"] = nullptr;
    arr.push_back(row);
  }
  j["rows"] = arr;
  return j.dump(2);
}

}  // namespace lnmt
