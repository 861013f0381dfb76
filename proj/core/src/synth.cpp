#include "lnmt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "lnmt/rng.hpp"
#include "nlohmann/json.hpp"

namespace lnmt {

namespace {

// A wide emotion vocabulary keeps individual tokens rare: a small labeled
// split sees each one only a handful of times, while the unlabeled pool has
// enough occurrences to pin it down.
constexpr int kRefuteCount = 120;
constexpr int kEndorseCount = 120;
// Tokens beyond this share of the emotion vocabulary stay out of the lexicon;
// their class signal is reachable only through the learned embeddings.
constexpr double kListedFraction = 0.2;
// Chance a non-signal report picks up one emotion token from either class.
constexpr double kOffTopicEmotionProb = 0.2;

std::string refute_token(int i) { return "refute" + std::to_string(i); }
std::string endorse_token(int i) { return "endorse" + std::to_string(i); }
std::string filler_token(int i) { return "topic" + std::to_string(i); }

std::vector<int> balanced_labels(int n, Rng& rng) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < (n + 1) / 2 ? 1 : 0;
  rng.shuffle(labels);
  return labels;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

int synth_reserved_vocab_size() { return kRefuteCount + kEndorseCount; }

SynthResult generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n_labeled < 0 || cfg.n_unlabeled < 0 || cfg.n_val < 0 || cfg.n_test < 0) {
    throw Error("synth: counts must be >= 0");
  }
  if (cfg.p_sig < 0.0 || cfg.p_sig > 1.0) throw Error("synth: p_sig must be in [0,1]");
  if (cfg.weak_noise < 0.0 || cfg.weak_noise > 1.0) throw Error("synth: weak_noise must be in [0,1]");
  if (cfg.report_count_min < 0 || cfg.report_count_max < cfg.report_count_min) {
    throw Error("synth: invalid report_count_range");
  }
  if (cfg.vocab_size < synth_reserved_vocab_size()) {
    throw Error("synth: vocab_size " + std::to_string(cfg.vocab_size) +
                " is smaller than the reserved emotion vocabulary (" +
                std::to_string(synth_reserved_vocab_size()) + ")");
  }

  Rng rng(cfg.seed);
  SynthResult result;

  const int n_filler = cfg.vocab_size - synth_reserved_vocab_size();
  const int n_listed_refute = static_cast<int>(kRefuteCount * kListedFraction);
  const int n_listed_endorse = static_cast<int>(kEndorseCount * kListedFraction);

  for (int i = 0; i < n_listed_refute; ++i) {
    result.lexicon.add(refute_token(i), i % 14, 1.0 + 0.5 * (i % 4), -1.0);
  }
  for (int i = 0; i < n_listed_endorse; ++i) {
    result.lexicon.add(endorse_token(i), 14 + (i % 15), 1.0 + 0.5 * (i % 4), 1.0);
  }

  auto draw_filler = [&]() -> std::string {
    if (n_filler > 0) return filler_token(static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n_filler))));
    // Degenerate vocab: fall back to a class-independent emotion draw.
    const int j = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(synth_reserved_vocab_size())));
    return j < kRefuteCount ? refute_token(j) : endorse_token(j - kRefuteCount);
  };
  auto draw_emotion = [&](int label) -> std::string {
    const int j = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(
        label == 1 ? kRefuteCount : kEndorseCount)));
    return label == 1 ? refute_token(j) : endorse_token(j);
  };
  auto draw_any_emotion = [&]() -> std::string {
    const int j = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(synth_reserved_vocab_size())));
    return j < kRefuteCount ? refute_token(j) : endorse_token(j - kRefuteCount);
  };

  auto make_report = [&](int label) -> std::string {
    const long n_base = rng.uniform_int(3, 8);
    std::vector<std::string> toks;
    for (long i = 0; i < n_base; ++i) toks.push_back(draw_filler());
    if (rng.bernoulli(cfg.p_sig)) {
      const long n_signal = rng.uniform_int(1, 2);
      for (long i = 0; i < n_signal; ++i) {
        const std::size_t pos = rng.uniform_index(toks.size() + 1);
        toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(pos), draw_emotion(label));
      }
    } else if (rng.bernoulli(kOffTopicEmotionProb)) {
      const std::size_t pos = rng.uniform_index(toks.size() + 1);
      toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(pos), draw_any_emotion());
    }
    return join(toks);
  };

  auto make_article = [&]() -> std::string {
    const long n = rng.uniform_int(6, 12);
    std::vector<std::string> toks;
    for (long i = 0; i < n; ++i) toks.push_back(draw_filler());
    return join(toks);
  };

  auto emit_split = [&](Split split, int count, const std::string& prefix) {
    std::vector<int> labels = balanced_labels(count, rng);
    for (int i = 0; i < count; ++i) {
      Sample s;
      s.id = prefix + std::to_string(i);
      s.split = split;
      const int label = labels[static_cast<std::size_t>(i)];
      s.article = make_article();
      const long m = rng.uniform_int(cfg.report_count_min, cfg.report_count_max);
      for (long r = 0; r < m; ++r) s.reports.push_back(Report{make_report(label)});
      if (split == Split::kUnlabeled) {
        result.hidden[s.id] = label;
      } else {
        s.gold_label = label;
      }
      result.corpus.samples.push_back(std::move(s));
    }
  };

  emit_split(Split::kTrain, cfg.n_labeled, "tr");
  emit_split(Split::kVal, cfg.n_val, "va");
  emit_split(Split::kTest, cfg.n_test, "te");
  emit_split(Split::kUnlabeled, cfg.n_unlabeled, "un");

  // Noisy weak-label export: exact round(weak_noise * N_u) flips.
  std::vector<std::string> unlabeled_ids;
  for (const Sample& s : result.corpus.samples) {
    if (s.split == Split::kUnlabeled) unlabeled_ids.push_back(s.id);
  }
  std::vector<std::string> flip_order = unlabeled_ids;
  rng.shuffle(flip_order);
  const std::size_t n_flips = static_cast<std::size_t>(
      std::llround(cfg.weak_noise * static_cast<double>(unlabeled_ids.size())));
  std::set<std::string> flipped(flip_order.begin(),
                                flip_order.begin() + static_cast<std::ptrdiff_t>(
                                                         std::min(n_flips, flip_order.size())));
  for (const std::string& id : unlabeled_ids) {
    const int truth = result.hidden.at(id);
    result.noisy_weak[id] = flipped.count(id) ? 1.0 - truth : static_cast<double>(truth);
  }
  return result;
}

void write_synth_outputs(const SynthResult& result, const SynthConfig& cfg,
                         const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string corpus_path = dir + "/corpus.jsonl";
  const std::string hidden_path = dir + "/hidden_labels.jsonl";
  const std::string weak_path = dir + "/weak_labels_noisy.jsonl";
  const std::string lexicon_path = dir + "/lexicon.tsv";

  write_corpus(result.corpus, corpus_path);
  write_hidden_labels(result.hidden, hidden_path);
  result.lexicon.save(lexicon_path);

  {
    std::ofstream out(weak_path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + weak_path);
    for (const auto& [id, y] : result.noisy_weak) {
      nlohmann::ordered_json obj;
      obj["id"] = id;
      obj["y_u"] = y;
      out << obj.dump() << '\n';
    }
  }
  {
    nlohmann::ordered_json meta;
    meta["config"] = {
        {"n_labeled", cfg.n_labeled},   {"n_unlabeled", cfg.n_unlabeled},
        {"n_val", cfg.n_val},           {"n_test", cfg.n_test},
        {"vocab_size", cfg.vocab_size}, {"p_sig", cfg.p_sig},
        {"report_count_min", cfg.report_count_min},
        {"report_count_max", cfg.report_count_max},
        {"seed", cfg.seed},             {"weak_noise", cfg.weak_noise},
    };
    meta["corpus"] = "corpus.jsonl";
    meta["hidden_labels"] = "hidden_labels.jsonl";
    meta["weak_labels_noisy"] = "weak_labels_noisy.jsonl";
    meta["lexicon"] = "lexicon.tsv";
    std::ofstream out(dir + "/meta.json", std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + dir + "/meta.json");
    out << meta.dump(2) << '\n';
  }
}

}  // namespace lnmt
