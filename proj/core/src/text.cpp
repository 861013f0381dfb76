#include "lnmt/text.hpp"

#include <cctype>

namespace lnmt {

namespace {

bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c >= 0x80 || c == '\'' || c == '_';
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  bool cur_is_word = false;

  auto flush = [&]() {
    if (!cur.empty()) tokens.push_back(cur);
    cur.clear();
  };

  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
      continue;
    }
    const bool word = is_word_char(c);
    if (!cur.empty() && word != cur_is_word) flush();
    cur_is_word = word;
    cur.push_back(word ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  }
  flush();
  return tokens;
}

}  // namespace lnmt
