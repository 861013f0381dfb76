#include "lnmt/encode.hpp"

#include "lnmt/text.hpp"

namespace lnmt {

namespace {

void encode_row(const std::string& text, const Vocab& vocab, const EmotionLexicon& lexicon,
                const EncodeLimits& limits, Eigen::Index row, EncodedSample& out) {
  std::vector<std::string> toks = tokenize(text);
  if (static_cast<int>(toks.size()) > limits.max_tokens) {
    toks.resize(static_cast<std::size_t>(limits.max_tokens));
  }

  out.emotion.row(row) = emotion_vector(toks, lexicon).transpose();

  if (toks.empty()) {
    out.lengths[static_cast<std::size_t>(row)] = 1;  // single padding token
    return;
  }
  out.lengths[static_cast<std::size_t>(row)] = static_cast<int>(toks.size());
  for (std::size_t j = 0; j < toks.size(); ++j) {
    out.tokens(row, static_cast<Eigen::Index>(j)) = vocab.index_of(toks[j]);
  }
}

}  // namespace

EncodedSample encode_sample(const Sample& sample, const Vocab& vocab,
                            const EmotionLexicon& lexicon, const EncodeLimits& limits) {
  if (limits.max_tokens < 1 || limits.max_sequences < 1) {
    throw Error("encode: limits must be positive");
  }
  const int n_reports =
      std::min(static_cast<int>(sample.reports.size()), limits.max_sequences - 1);
  const int n_seq = 1 + n_reports;

  EncodedSample enc;
  enc.tokens = IntMat::Constant(n_seq, limits.max_tokens, kPadIndex);
  enc.lengths.assign(static_cast<std::size_t>(n_seq), 1);
  enc.emotion = Mat::Zero(n_seq, kEmotionDim);

  encode_row(sample.article, vocab, lexicon, limits, 0, enc);
  for (int r = 0; r < n_reports; ++r) {
    encode_row(sample.reports[static_cast<std::size_t>(r)].text, vocab, lexicon, limits, r + 1, enc);
  }
  return enc;
}

std::vector<EncodedSample> encode_corpus(const Corpus& corpus, const Vocab& vocab,
                                         const EmotionLexicon& lexicon,
                                         const EncodeLimits& limits) {
  std::vector<EncodedSample> out;
  out.reserve(corpus.samples.size());
  for (const Sample& s : corpus.samples) {
    out.push_back(encode_sample(s, vocab, lexicon, limits));
  }
  return out;
}

}  // namespace lnmt
