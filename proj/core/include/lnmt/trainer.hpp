#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lnmt/checkpoint.hpp"
#include "lnmt/corpus.hpp"
#include "lnmt/encode.hpp"
#include "lnmt/encoder.hpp"
#include "lnmt/meanteacher.hpp"
#include "lnmt/metrics.hpp"
#include "lnmt/optimizer.hpp"
#include "lnmt/schedule.hpp"

namespace lnmt {

struct Stage1Config {
  int epochs = 200;
  int batch = 48;
  std::int64_t warmup_iters = 8000;
  double peak_lr = 3e-5;
  double floor_lr = 3e-7;
  int eval_every = 1;
  double clip_norm = 0.0;       // disabled in stage 1 unless set
  int stop_after_epochs = 0;    // pause the run here (0 = run to `epochs`);
                                // the schedule still spans all `epochs`
};

struct Stage2Config {
  int generations = 15;
  int batch = 64;
  double lr = 2e-6;
  double alpha = 0.999;  // EMA momentum
  double beta = 0.9;     // label propagation rate
  double sigma = 1.0;    // MMD kernel bandwidth
  bool use_lp = true;
  bool use_lr = true;
  double clip_norm = 5.0;
  int stop_after_generations = 0;  // pause point for resumable runs (0 = all)
  // Continue stage 1's Adam moments instead of starting cold. Avoids the
  // full-size first-step jolt of a fresh bias-corrected Adam, which matters
  // at desk-scale learning rates.
  bool warm_start_adam = false;
};

struct TrainConfig {
  EncoderConfig encoder;
  AdamConfig adam;
  Stage1Config stage1;
  Stage2Config stage2;
  std::uint64_t seed = 1;
  int vocab_limit = 50000;
  std::string checkpoint_dir;

  /// Hyperparameters at their published defaults (300-dim model, 200 epochs,
  /// warmup 8000, alpha 0.999, beta 0.9, ...).
  static TrainConfig paper_defaults();

  /// Small configuration sized for laptop-scale synthetic corpora; schedule
  /// warmup shrinks with the run per LrSchedule::for_run.
  static TrainConfig desk_defaults();

  void validate() const;
};

/// key=value run-config file ('#' comments). Unknown keys error.
TrainConfig parse_train_config(const std::string& path);
void apply_config_override(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Immutable per-run context: vocabulary, lexicon, and the corpus encoded
/// once up front.
struct Pipeline {
  const Corpus* corpus = nullptr;
  Vocab vocab;
  EmotionLexicon lexicon;
  std::vector<EncodedSample> encoded;
  std::vector<std::size_t> train_idx, val_idx, test_idx, unlabeled_idx;

  std::vector<const EncodedSample*> pointers_of(const std::vector<std::size_t>& idx) const;
};

Pipeline build_pipeline(const Corpus& corpus, EmotionLexicon lexicon, const TrainConfig& cfg,
                        const std::optional<std::string>& embeddings_path = std::nullopt);

/// Accuracy of `params` on a split (0.5 threshold), plus full metrics.
MetricsReport evaluate_split(const EncoderParams& params, const Pipeline& pipe,
                             const std::vector<std::size_t>& idx);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_accuracy;  // absent on epochs without evaluation
};

struct Stage1Result {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

// RNG draw order (one seeded generator per run): parameter init uses
// cfg.seed; the training generator is seeded with cfg.seed ^ kTrainSeedSalt
// and is consumed strictly by (a) one index shuffle per epoch, then (b)
// dropout masks inside forward passes in batch order.
inline constexpr std::uint64_t kTrainSeedSalt = 0x9e3779b97f4a7c15ull;
inline constexpr std::uint64_t kStage2SeedSalt = 0xc2b2ae3d27d4eb4full;

/// Supervised pre-training of the baseline model on the labeled train split.
/// Returns the best-validation checkpoint (with resume state). When `resume`
/// is given, continues it and reproduces the uninterrupted run bitwise.
Stage1Result train_stage1(const Pipeline& pipe, const TrainConfig& cfg,
                          const Checkpoint* resume = nullptr);

struct GenerationLog {
  int generation = 0;
  Eigen::Matrix2d c_raw = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d c_normalized = Eigen::Matrix2d::Identity();
  double mean_omega = 1.0;
  std::optional<double> weak_label_accuracy;  // vs hidden truth, when available
  double loss_labeled = 0.0;
  double loss_unlabeled = 0.0;
  double val_accuracy = 0.0;
};

struct Stage2Result {
  Checkpoint checkpoint;  // teacher at best validation accuracy
  std::vector<GenerationLog> log;
};

/// Mean-teacher refinement: per generation refresh/propagate/weight the weak
/// labels, then one epoch of L_l + weighted L_u with an EMA update after
/// every student step. Ablations: stage2.use_lp / stage2.use_lr.
Stage2Result train_stage2(const Pipeline& pipe, const Checkpoint& stage1, const TrainConfig& cfg,
                          const HiddenLabels* hidden = nullptr,
                          const Checkpoint* resume = nullptr);

/// Rebuilds the encoder (and its vocabulary) stored in a checkpoint.
/// `which` selects "params", "best" or "teacher".
std::pair<EncoderParams, Vocab> encoder_from_checkpoint(const Checkpoint& ckpt,
                                                        const std::string& which = "best");

/// Encoder/train config echo recovered from a checkpoint.
TrainConfig config_from_checkpoint(const Checkpoint& ckpt);

void write_generation_diagnostics(const std::vector<GenerationLog>& log, const std::string& path);
void write_epoch_metrics(const std::vector<EpochLog>& log, const std::string& path);

}  // namespace lnmt
