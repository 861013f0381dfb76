#include "lnmt/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "lnmt/rng.hpp"
#include "lnmt/text.hpp"

namespace lnmt {

namespace {

constexpr const char* kPadToken = "<pad>";
constexpr const char* kUnkToken = "<unk>";

}  // namespace

Vocab Vocab::from_tokens(std::vector<std::string> tokens, Mat emb) {
  if (static_cast<Eigen::Index>(tokens.size()) != emb.rows()) {
    throw Error("vocab: token list and embedding rows disagree");
  }
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
    throw Error("vocab: token list must start with <pad>, <unk>");
  }
  Vocab v;
  v.tokens_ = std::move(tokens);
  v.embeddings_ = std::move(emb);
  v.embeddings_.row(kPadIndex).setZero();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    v.map_[v.tokens_[i]] = static_cast<int>(i);
  }
  return v;
}

Vocab load_embeddings(const std::string& path, int vocab_limit) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file: " + path);

  std::vector<std::string> tokens = {kPadToken, kUnkToken};
  std::vector<std::vector<double>> rows;
  int dim = -1;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (vocab_limit > 0 && static_cast<int>(tokens.size()) >= vocab_limit + 2) break;

    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> values;
    double x;
    while (ss >> x) values.push_back(x);

    if (values.empty()) {
      throw Error("embedding file: no values at line " + std::to_string(line_no));
    }
    if (dim < 0) {
      dim = static_cast<int>(values.size());
      if (dim <= 0) throw Error("embedding file: dimension must be positive");
    } else if (static_cast<int>(values.size()) != dim) {
      throw Error("embedding file: expected " + std::to_string(dim) + " values but got " +
                  std::to_string(values.size()) + " at line " + std::to_string(line_no));
    }
    tokens.push_back(token);
    rows.push_back(std::move(values));
  }
  if (dim < 0) throw Error("embedding file is empty: " + path);

  Mat emb = Mat::Zero(static_cast<Eigen::Index>(tokens.size()), dim);
  Rng rng(0x5eedu);  // fixed seed for the UNK vector
  for (int j = 0; j < dim; ++j) emb(kUnkIndex, j) = rng.normal(0.0, 0.02);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < dim; ++j) emb(static_cast<Eigen::Index>(i) + 2, j) = rows[i][j];
  }
  return Vocab::from_tokens(std::move(tokens), std::move(emb));
}

Vocab build_vocab(const Corpus& corpus, int dim, int vocab_limit, std::uint64_t seed) {
  if (dim <= 0) throw Error("build_vocab: dimension must be positive");

  std::map<std::string, std::size_t> counts;
  for (const Sample& s : corpus.samples) {
    for (const std::string& t : tokenize(s.article)) ++counts[t];
    for (const Report& r : s.reports) {
      for (const std::string& t : tokenize(r.text)) ++counts[t];
    }
  }

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (vocab_limit > 0 && static_cast<int>(ranked.size()) > vocab_limit) {
    ranked.resize(static_cast<std::size_t>(vocab_limit));
  }

  std::vector<std::string> tokens = {kPadToken, kUnkToken};
  tokens.reserve(ranked.size() + 2);
  for (const auto& [t, c] : ranked) tokens.push_back(t);

  Rng rng(seed);
  Mat emb(static_cast<Eigen::Index>(tokens.size()), dim);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    for (int j = 0; j < dim; ++j) emb(i, j) = rng.normal(0.0, stddev);
  }
  emb.row(kPadIndex).setZero();
  return Vocab::from_tokens(std::move(tokens), std::move(emb));
}

}  // namespace lnmt
