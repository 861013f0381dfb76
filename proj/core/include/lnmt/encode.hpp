#pragma once

#include <vector>

#include "lnmt/common.hpp"
#include "lnmt/corpus.hpp"
#include "lnmt/emotion.hpp"
#include "lnmt/vocab.hpp"

namespace lnmt {

struct EncodeLimits {
  int max_tokens = 40;      // per-sequence token cap
  int max_sequences = 100;  // article + reports cap
};

/// Numeric form of one sample: row 0 is the article, rows 1.. are reports in
/// corpus order, truncated to the limits. Sequences that tokenize to nothing
/// keep one padding token and a zero emotion row.
struct EncodedSample {
  IntMat tokens;            // n_seq x max_tokens, PAD beyond lengths[i]
  std::vector<int> lengths; // true token count per row, always >= 1
  Mat emotion;              // n_seq x 47

  int n_seq() const { return static_cast<int>(tokens.rows()); }
};

EncodedSample encode_sample(const Sample& sample, const Vocab& vocab,
                            const EmotionLexicon& lexicon, const EncodeLimits& limits = {});

/// Encodes every sample once; encoding is pure, so the result is shared by
/// all later passes.
std::vector<EncodedSample> encode_corpus(const Corpus& corpus, const Vocab& vocab,
                                         const EmotionLexicon& lexicon,
                                         const EncodeLimits& limits = {});

}  // namespace lnmt
