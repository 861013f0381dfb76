#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lnmt/common.hpp"

namespace lnmt {

inline constexpr int kEmotionCategories = 29;
inline constexpr int kSentimentSlot = 29;
inline constexpr int kAuxOffset = 30;
inline constexpr int kAuxSlots = 17;
inline constexpr int kEmotionDim = 47;  // 29 category/intensity + 1 sentiment + 17 auxiliary

struct LexiconEntry {
  int category = 0;       // in [0, 29)
  double intensity = 0.0; // >= 0, finite
  double polarity = 0.0;  // in [-1, 1]
};

/// Token -> (category, intensity, polarity) mapping loaded from a TSV with
/// columns token, category, intensity, polarity. Immutable after load.
class EmotionLexicon {
 public:
  EmotionLexicon() = default;

  static EmotionLexicon load(const std::string& path);
  void save(const std::string& path) const;

  /// Adds one entry; throws on duplicate token or invalid fields.
  void add(const std::string& token, int category, double intensity, double polarity);

  const LexiconEntry* find(const std::string& token) const {
    auto it = entries_.find(token);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }

  /// Entries in deterministic (sorted token) order, for serialization.
  std::vector<std::pair<std::string, LexiconEntry>> sorted_entries() const;

 private:
  std::unordered_map<std::string, LexiconEntry> entries_;
};

// 47-slot emotion vector for one token sequence:
//   [0..29)   per-category intensity sums divided by token count
//   [29]      mean sentiment polarity over lexicon-matched tokens (0 if none)
//   [30..38)  counts / token count: '!' runs, '?' runs, negations, 1st/2nd
//             person pronouns, all-caps tokens, digit tokens, url tokens,
//             emoticon tokens
//   [38]      token count
//   [39]      mean token length
//   [40]      type-token ratio
//   [41..47)  reserved, always zero
// Empty input -> all zeros. Order-invariant by construction.
Vec emotion_vector(const std::vector<std::string>& tokens, const EmotionLexicon& lexicon);

}  // namespace lnmt
