#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lnmt/checkpoint.hpp"
#include "lnmt/metrics.hpp"
#include "lnmt/synth.hpp"
#include "lnmt/trainer.hpp"

namespace lnmt {

/// FNV-1a over the canonical JSONL serialization of the corpus.
std::uint64_t corpus_hash(const Corpus& corpus);

/// Lexicon stored in a checkpoint's config echo.
EmotionLexicon lexicon_from_checkpoint(const Checkpoint& ckpt);

/// Forward over one split of a corpus with the model stored in a checkpoint
/// ("params", "best" or "teacher"); no parameter updates.
MetricsReport evaluate_checkpoint(const Checkpoint& ckpt, const Corpus& corpus,
                                  const EmotionLexicon& lexicon, Split split,
                                  const std::string& which = "best");

/// metrics.json payload: the report plus the published reference targets
/// (informational footer; those numbers are not reproducible at desk scale).
std::string metrics_with_reference(const MetricsReport& report);

/// Soft weak labels for the unlabeled samples of a corpus (all samples when
/// it has no unlabeled split). Returns (id, y_u) rows in corpus order.
std::vector<std::pair<std::string, double>> annotate_corpus(const Checkpoint& ckpt,
                                                            const Corpus& corpus,
                                                            const EmotionLexicon& lexicon,
                                                            const std::string& which = "best");
void write_weak_labels(const std::vector<std::pair<std::string, double>>& rows,
                       const std::string& path);

struct VariantResult {
  double test_accuracy = 0.0;
  std::optional<double> test_auc;
  std::vector<double> weak_label_curve;  // per-generation accuracy vs hidden truth
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::uint64_t corpus_fingerprint = 0;
  std::map<std::string, VariantResult> variants;
};

/// Ablation grid: stage1, stage1_no_emotion, and the three stage-2 variants
/// mt (no LP/LR), mt_lp, mt_lp_lr — one full run of each per seed.
struct RunManifest {
  std::string config_echo;
  std::vector<std::uint64_t> seeds;
  std::vector<SeedRun> runs;

  std::map<std::string, std::pair<double, double>> accuracy_aggregate() const;  // mean, stddev
  std::string to_json() const;
};

struct AblationSpec {
  SynthConfig corpus_cfg;
  TrainConfig train_cfg = TrainConfig::desk_defaults();
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

RunManifest run_ablation_suite(const AblationSpec& spec);

struct SweepSpec {
  SynthConfig corpus_cfg;
  TrainConfig train_cfg = TrainConfig::desk_defaults();
  std::uint64_t seed = 1;
  std::vector<double> alphas, betas, sigmas, p_sigs, weak_noises;  // empty -> config value
};

struct SweepRow {
  double alpha, beta, sigma, p_sig, weak_noise;
  double test_accuracy;
  std::optional<double> test_auc;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec);
std::string sweep_to_json(const SweepSpec& spec, const std::vector<SweepRow>& rows);

}  // namespace lnmt
