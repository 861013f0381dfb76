#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lnmt/common.hpp"
#include "lnmt/corpus.hpp"

namespace lnmt {

inline constexpr int kPadIndex = 0;
inline constexpr int kUnkIndex = 1;

/// Token -> index map plus one embedding row per index. PAD is index 0 with
/// an all-zero vector; unknown tokens map to UNK. Immutable after build.
class Vocab {
 public:
  Vocab() = default;

  int index_of(const std::string& token) const {
    auto it = map_.find(token);
    return it == map_.end() ? kUnkIndex : it->second;
  }

  bool contains(const std::string& token) const { return map_.count(token) > 0; }

  int size() const { return static_cast<int>(tokens_.size()); }
  int embedding_dim() const { return static_cast<int>(embeddings_.cols()); }

  const Mat& embeddings() const { return embeddings_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Rebuilds index->token/embedding state from an ordered token list. Row
  /// count of `emb` must equal tokens.size(); tokens[0]/tokens[1] must be the
  /// PAD/UNK sentinels.
  static Vocab from_tokens(std::vector<std::string> tokens, Mat emb);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> map_;
  Mat embeddings_;  // size() x dim

  friend Vocab load_embeddings(const std::string&, int);
  friend Vocab build_vocab(const Corpus&, int, int, std::uint64_t);
};

/// Loads a text embedding file, one "token v1 ... v_d" line per token, all
/// lines the same d. Keeps at most vocab_limit tokens (file order). UNK gets
/// a seeded N(0, 0.02^2) vector, PAD is zero.
Vocab load_embeddings(const std::string& path, int vocab_limit);

/// Builds a vocab from corpus text with fresh N(0, 1/sqrt(dim)) embeddings,
/// most frequent tokens first (ties broken lexicographically).
Vocab build_vocab(const Corpus& corpus, int dim, int vocab_limit, std::uint64_t seed);

}  // namespace lnmt
