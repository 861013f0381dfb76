// Command line front end: corpus generation, the two training stages,
// evaluation, the ablation/sweep harnesses, and the weak-label annotator.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lnmt/experiment.hpp"
#include "lnmt/synth.hpp"
#include "lnmt/trainer.hpp"

namespace fs = std::filesystem;
using namespace lnmt;

namespace {

struct ConfigCliOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  bool desk = false;
};

void add_config_options(CLI::App* cmd, ConfigCliOptions& opts) {
  cmd->add_option("--config", opts.config_path, "key=value run config file");
  cmd->add_option("--set", opts.overrides, "config override, e.g. --set stage1.epochs=20");
  cmd->add_flag("--desk", opts.desk, "start from the desk-scale preset instead of paper defaults");
}

TrainConfig resolve_config(const ConfigCliOptions& opts) {
  TrainConfig cfg = opts.desk ? TrainConfig::desk_defaults() : TrainConfig::paper_defaults();
  if (!opts.config_path.empty()) {
    TrainConfig file_cfg =
        opts.desk ? TrainConfig::desk_defaults() : TrainConfig::paper_defaults();
    // file values land on top of the chosen preset
    std::ifstream in(opts.config_path);
    if (!in) throw Error("cannot open config file: " + opts.config_path);
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
      apply_config_override(file_cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg = file_cfg;
  }
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got " + kv);
    apply_config_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("LNMT_CHECKPOINT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return ".";
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << content;
  if (content.empty() || content.back() != '\n') out << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"weakly supervised fake-news detection with mean-teacher label refinement"};
  app.require_subcommand(1);

  // ---- generate ----
  SynthConfig synth_cfg;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "write a synthetic corpus with its lexicon");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--n-labeled", synth_cfg.n_labeled, "train split size");
  gen->add_option("--n-unlabeled", synth_cfg.n_unlabeled, "unlabeled split size");
  gen->add_option("--n-val", synth_cfg.n_val, "validation split size");
  gen->add_option("--n-test", synth_cfg.n_test, "test split size");
  gen->add_option("--vocab-size", synth_cfg.vocab_size, "total distinct tokens");
  gen->add_option("--p-sig", synth_cfg.p_sig, "per-report emotion signal probability");
  gen->add_option("--report-min", synth_cfg.report_count_min, "min reports per article");
  gen->add_option("--report-max", synth_cfg.report_count_max, "max reports per article");
  gen->add_option("--seed", synth_cfg.seed, "generator seed");
  gen->add_option("--weak-noise", synth_cfg.weak_noise, "flip fraction in the noisy weak-label export");

  // ---- pretrain ----
  ConfigCliOptions pre_cfg;
  std::string pre_corpus, pre_lexicon, pre_embeddings, pre_out, pre_resume;
  auto* pre = app.add_subcommand("pretrain", "stage 1: supervised baseline training");
  pre->add_option("--corpus", pre_corpus, "corpus.jsonl")->required();
  pre->add_option("--lexicon", pre_lexicon, "emotion lexicon TSV")->required();
  pre->add_option("--embeddings", pre_embeddings, "pretrained embedding text file");
  pre->add_option("--out-dir", pre_out, "output directory (default $LNMT_CHECKPOINT_DIR or .)");
  pre->add_option("--resume", pre_resume, "resume from a stage-1 checkpoint");
  add_config_options(pre, pre_cfg);

  // ---- refine ----
  ConfigCliOptions ref_cfg;
  std::string ref_corpus, ref_lexicon, ref_stage1, ref_hidden, ref_out, ref_resume;
  bool no_lp = false, no_lr = false;
  auto* ref = app.add_subcommand("refine", "stage 2: mean-teacher weak-label refinement");
  ref->add_option("--corpus", ref_corpus, "corpus.jsonl")->required();
  ref->add_option("--lexicon", ref_lexicon, "emotion lexicon TSV")->required();
  ref->add_option("--stage1", ref_stage1, "stage-1 checkpoint")->required();
  ref->add_option("--hidden", ref_hidden, "hidden labels for weak-label diagnostics");
  ref->add_option("--out-dir", ref_out, "output directory (default $LNMT_CHECKPOINT_DIR or .)");
  ref->add_option("--resume", ref_resume, "resume from a stage-2 checkpoint");
  ref->add_flag("--no-lp", no_lp, "disable label propagation");
  ref->add_flag("--no-lr", no_lr, "disable label reliability weighting");
  add_config_options(ref, ref_cfg);

  // ---- evaluate ----
  std::string eval_ckpt, eval_corpus, eval_lexicon, eval_split = "test", eval_which = "best",
              eval_out;
  auto* ev = app.add_subcommand("evaluate", "metrics for a checkpoint on one corpus split");
  ev->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  ev->add_option("--corpus", eval_corpus, "corpus.jsonl")->required();
  ev->add_option("--lexicon", eval_lexicon, "lexicon TSV (defaults to the one in the checkpoint)");
  ev->add_option("--split", eval_split, "train|val|test");
  ev->add_option("--which", eval_which, "params|best|teacher");
  ev->add_option("--out", eval_out, "metrics.json path (stdout when omitted)");

  // ---- ablate ----
  ConfigCliOptions abl_cfg;
  abl_cfg.desk = true;
  std::string abl_out;
  int abl_seeds = 5;
  SynthConfig abl_corpus;  // criterion-shaped defaults
  auto* abl = app.add_subcommand("ablate", "stage1 / mt / mt+lp / mt+lp+lr grid over seeds");
  abl->add_option("--out", abl_out, "manifest.json path")->required();
  abl->add_option("--seeds", abl_seeds, "number of seeds (1..N)");
  abl->add_option("--n-labeled", abl_corpus.n_labeled, "train split size");
  abl->add_option("--n-unlabeled", abl_corpus.n_unlabeled, "unlabeled split size");
  abl->add_option("--n-val", abl_corpus.n_val, "validation split size");
  abl->add_option("--n-test", abl_corpus.n_test, "test split size");
  abl->add_option("--p-sig", abl_corpus.p_sig, "per-report signal probability");
  abl->add_option("--weak-noise", abl_corpus.weak_noise, "noisy-export flip fraction");
  add_config_options(abl, abl_cfg);

  // ---- sweep ----
  ConfigCliOptions sw_cfg;
  sw_cfg.desk = true;
  std::string sw_out;
  SweepSpec sweep_spec;
  auto* sw = app.add_subcommand("sweep", "grid over alpha/beta/sigma/p_sig/weak-noise");
  sw->add_option("--out", sw_out, "sweep.json path")->required();
  sw->add_option("--seed", sweep_spec.seed, "corpus+train seed");
  sw->add_option("--alpha", sweep_spec.alphas, "EMA momentum values");
  sw->add_option("--beta", sweep_spec.betas, "propagation rate values");
  sw->add_option("--sigma", sweep_spec.sigmas, "MMD bandwidth values");
  sw->add_option("--p-sig", sweep_spec.p_sigs, "corpus signal strengths");
  sw->add_option("--noise", sweep_spec.weak_noises, "corpus weak-noise fractions");
  add_config_options(sw, sw_cfg);

  // ---- annotate ----
  std::string ann_ckpt, ann_corpus, ann_lexicon, ann_which = "best", ann_out;
  auto* ann = app.add_subcommand("annotate", "write weak labels for an unlabeled corpus");
  ann->add_option("--ckpt", ann_ckpt, "checkpoint file")->required();
  ann->add_option("--corpus", ann_corpus, "corpus.jsonl")->required();
  ann->add_option("--lexicon", ann_lexicon, "lexicon TSV (defaults to the one in the checkpoint)");
  ann->add_option("--which", ann_which, "params|best|teacher");
  ann->add_option("--out", ann_out, "weak_labels.jsonl path")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const SynthResult result = generate_synthetic(synth_cfg);
    write_synth_outputs(result, synth_cfg, gen_out);
    std::cout << "wrote corpus (" << result.corpus.samples.size() << " samples) to " << gen_out
              << std::endl;
    return 0;
  }

  if (pre->parsed()) {
    const TrainConfig cfg = resolve_config(pre_cfg);
    const Corpus corpus = load_corpus(pre_corpus);
    EmotionLexicon lexicon = EmotionLexicon::load(pre_lexicon);
    std::optional<std::string> embeddings;
    if (!pre_embeddings.empty()) embeddings = pre_embeddings;
    const Pipeline pipe = build_pipeline(corpus, std::move(lexicon), cfg, embeddings);

    std::optional<Checkpoint> resume;
    if (!pre_resume.empty()) resume = load_checkpoint(pre_resume);
    const Stage1Result result = train_stage1(pipe, cfg, resume ? &*resume : nullptr);

    const std::string out_dir = resolve_out_dir(pre_out);
    fs::create_directories(out_dir);
    save_checkpoint(result.checkpoint, out_dir + "/stage1.ckpt");
    write_epoch_metrics(result.log, out_dir + "/stage1_metrics.jsonl");
    std::cout << "stage-1 best val accuracy " << result.checkpoint.best_val << ", checkpoint at "
              << out_dir << "/stage1.ckpt" << std::endl;
    return 0;
  }

  if (ref->parsed()) {
    TrainConfig cfg = resolve_config(ref_cfg);
    if (no_lp) cfg.stage2.use_lp = false;
    if (no_lr) cfg.stage2.use_lr = false;
    const Corpus corpus = load_corpus(ref_corpus);
    EmotionLexicon lexicon = EmotionLexicon::load(ref_lexicon);
    const Pipeline pipe = build_pipeline(corpus, std::move(lexicon), cfg);

    const Checkpoint stage1 = load_checkpoint(ref_stage1);
    std::optional<HiddenLabels> hidden;
    if (!ref_hidden.empty()) hidden = load_hidden_labels(ref_hidden);
    std::optional<Checkpoint> resume;
    if (!ref_resume.empty()) resume = load_checkpoint(ref_resume);

    const Stage2Result result = train_stage2(pipe, stage1, cfg, hidden ? &*hidden : nullptr,
                                             resume ? &*resume : nullptr);
    const std::string out_dir = resolve_out_dir(ref_out);
    fs::create_directories(out_dir);
    save_checkpoint(result.checkpoint, out_dir + "/stage2.ckpt");
    write_generation_diagnostics(result.log, out_dir + "/stage2_diagnostics.jsonl");
    std::cout << "stage-2 best val accuracy " << result.checkpoint.best_val << ", checkpoint at "
              << out_dir << "/stage2.ckpt" << std::endl;
    return 0;
  }

  if (ev->parsed()) {
    const Checkpoint ckpt = load_checkpoint(eval_ckpt);
    const Corpus corpus = load_corpus(eval_corpus);
    const EmotionLexicon lexicon = eval_lexicon.empty() ? lexicon_from_checkpoint(ckpt)
                                                        : EmotionLexicon::load(eval_lexicon);
    const MetricsReport report =
        evaluate_checkpoint(ckpt, corpus, lexicon, split_from_name(eval_split), eval_which);
    const std::string payload = metrics_with_reference(report);
    if (eval_out.empty()) {
      std::cout << payload << std::endl;
    } else {
      write_text(eval_out, payload);
      std::cout << "wrote " << eval_out << std::endl;
    }
    return 0;
  }

  if (abl->parsed()) {
    AblationSpec spec;
    spec.corpus_cfg = abl_corpus;
    spec.train_cfg = resolve_config(abl_cfg);
    if (abl_seeds < 3) throw Error("ablate: need at least 3 seeds");
    spec.seeds.clear();
    for (int s = 1; s <= abl_seeds; ++s) spec.seeds.push_back(static_cast<std::uint64_t>(s));
    const RunManifest manifest = run_ablation_suite(spec);
    write_text(abl_out, manifest.to_json());
    std::cout << "wrote " << abl_out << std::endl;
    return 0;
  }

  if (sw->parsed()) {
    sweep_spec.train_cfg = resolve_config(sw_cfg);
    const std::vector<SweepRow> rows = run_sweep(sweep_spec);
    write_text(sw_out, sweep_to_json(sweep_spec, rows));
    std::cout << "wrote " << sw_out << " (" << rows.size() << " rows)" << std::endl;
    return 0;
  }

  if (ann->parsed()) {
    const Checkpoint ckpt = load_checkpoint(ann_ckpt);
    const Corpus corpus = load_corpus(ann_corpus);
    const EmotionLexicon lexicon = ann_lexicon.empty() ? lexicon_from_checkpoint(ckpt)
                                                       : EmotionLexicon::load(ann_lexicon);
    const auto rows = annotate_corpus(ckpt, corpus, lexicon, ann_which);
    write_weak_labels(rows, ann_out);
    std::cout << "wrote " << rows.size() << " weak labels to " << ann_out << std::endl;
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
