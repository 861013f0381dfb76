#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "lnmt/corpus.hpp"
#include "lnmt/emotion.hpp"

namespace lnmt {

/// Knobs of the synthetic news-with-reports world. Fake articles attract
/// refuting/negative reports, real articles approving/positive ones, with
/// per-report probability p_sig; everything else is class-independent noise.
struct SynthConfig {
  int n_labeled = 200;    // train split size
  int n_unlabeled = 2000;
  int n_val = 500;
  int n_test = 500;
  int vocab_size = 600;   // total distinct tokens incl. the reserved emotion vocab
  double p_sig = 0.8;     // probability a report carries class-matched emotion tokens
  int report_count_min = 1;
  int report_count_max = 4;
  std::uint64_t seed = 1;
  double weak_noise = 0.3;  // fraction of hidden labels flipped in the noisy export
};

struct SynthResult {
  Corpus corpus;
  HiddenLabels hidden;                     // true labels of unlabeled samples
  std::map<std::string, double> noisy_weak;  // hidden labels with weak_noise flips
  EmotionLexicon lexicon;                  // covers the listed emotion tokens
};

/// Number of reserved refute + endorse tokens; vocab_size below this errors.
int synth_reserved_vocab_size();

/// Pure function of the config: identical cfg -> identical result.
SynthResult generate_synthetic(const SynthConfig& cfg);

/// Writes corpus.jsonl, hidden_labels.jsonl, weak_labels_noisy.jsonl,
/// lexicon.tsv and meta.json under dir (created if missing).
void write_synth_outputs(const SynthResult& result, const SynthConfig& cfg,
                         const std::string& dir);

}  // namespace lnmt
