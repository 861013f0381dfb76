#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace lnmt {

enum class Split { kTrain, kVal, kTest, kUnlabeled };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

/// One user feedback comment attached to a news article. Empty reports are
/// retained; they encode to a single padding token and a zero emotion vector.
struct Report {
  std::string text;
};

struct Sample {
  std::string id;
  std::string article;
  std::vector<Report> reports;
  std::optional<int> gold_label;  // 0 = real, 1 = fake; present iff labeled split
  Split split = Split::kUnlabeled;
};

/// Immutable after load; safe to share read-only across workers.
struct Corpus {
  std::vector<Sample> samples;

  std::vector<std::size_t> indices_of(Split s) const;
  std::size_t count_of(Split s) const;
};

/// True labels of unlabeled samples, kept out of Sample on purpose: training
/// code never sees them, diagnostics load them from a side file.
using HiddenLabels = std::unordered_map<std::string, int>;

struct SplitStats {
  struct PerSplit {
    std::size_t count = 0;
    std::size_t fake = 0;
    std::size_t real = 0;
    double fake_ratio = 0.0;  // fake / count over labeled samples
    bool imbalanced = false;
  };
  std::array<PerSplit, 4> per_split;  // indexed by Split
  std::size_t total = 0;

  const PerSplit& of(Split s) const { return per_split[static_cast<std::size_t>(s)]; }
};

/// Reads one JSON object per line: {"id","article","reports",["label"],"split"}.
/// Raw strings are preserved; no tokenization happens here.
Corpus load_corpus(const std::string& path);

/// Writes the JSONL form load_corpus reads. Deterministic byte output.
void write_corpus(const Corpus& corpus, const std::string& path);

/// Per-split counts and class balance. Splits whose fake ratio deviates from
/// 0.5 by more than `tolerance` are flagged.
SplitStats split_counts(const Corpus& corpus, double tolerance = 0.1);

HiddenLabels load_hidden_labels(const std::string& path);
void write_hidden_labels(const HiddenLabels& labels, const std::string& path);

}  // namespace lnmt
