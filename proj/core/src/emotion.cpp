#include "lnmt/emotion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lnmt {

namespace {

const std::set<std::string>& negation_tokens() {
  static const std::set<std::string> kSet = {"not", "no", "never", "none", "cannot", "n't", "nothing"};
  return kSet;
}

const std::set<std::string>& pronoun_tokens() {
  static const std::set<std::string> kSet = {"i", "you", "we", "me", "my", "your", "our", "us"};
  return kSet;
}

const std::set<std::string>& emoticon_tokens() {
  static const std::set<std::string> kSet = {":)", ":(", ":d", ";)", ":-)", ":-("};
  return kSet;
}

bool is_all_caps(const std::string& t) {
  if (t.size() < 2) return false;
  for (unsigned char c : t) {
    if (!std::isupper(c)) return false;
  }
  return true;
}

bool is_digits(const std::string& t) {
  if (t.empty()) return false;
  for (unsigned char c : t) {
    if (!std::isdigit(c)) return false;
  }
  return true;
}

bool is_url_like(const std::string& t) {
  return t == "http" || t == "https" || t == "www" || t == "<url>";
}

}  // namespace

void EmotionLexicon::add(const std::string& token, int category, double intensity, double polarity) {
  if (category < 0 || category >= kEmotionCategories) {
    throw Error("lexicon: category out of range for token " + token);
  }
  if (!std::isfinite(intensity) || intensity < 0.0) {
    throw Error("lexicon: invalid intensity for token " + token);
  }
  if (!std::isfinite(polarity) || polarity < -1.0 || polarity > 1.0) {
    throw Error("lexicon: polarity outside [-1,1] for token " + token);
  }
  if (entries_.count(token)) throw Error("lexicon: duplicate token " + token);
  entries_[token] = LexiconEntry{category, intensity, polarity};
}

EmotionLexicon EmotionLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon file: " + path);
  EmotionLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string token, cat_s, int_s, pol_s;
    if (!std::getline(ss, token, '\t') || !std::getline(ss, cat_s, '\t') ||
        !std::getline(ss, int_s, '\t') || !std::getline(ss, pol_s)) {
      throw Error("lexicon: malformed line " + std::to_string(line_no) + " in " + path);
    }
    try {
      lex.add(token, std::stoi(cat_s), std::stod(int_s), std::stod(pol_s));
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error("lexicon: unparsable fields at line " + std::to_string(line_no) + " in " + path);
    }
  }
  return lex;
}

void EmotionLexicon::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out.precision(17);
  for (const auto& [token, e] : sorted_entries()) {
    out << token << '\t' << e.category << '\t' << e.intensity << '\t' << e.polarity << '\n';
  }
}

std::vector<std::pair<std::string, LexiconEntry>> EmotionLexicon::sorted_entries() const {
  std::vector<std::pair<std::string, LexiconEntry>> rows(entries_.begin(), entries_.end());
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return rows;
}

Vec emotion_vector(const std::vector<std::string>& tokens, const EmotionLexicon& lexicon) {
  Vec v = Vec::Zero(kEmotionDim);
  if (tokens.empty()) return v;

  const double n = static_cast<double>(tokens.size());
  double polarity_sum = 0.0;
  std::size_t matched = 0;

  double excl = 0, quest = 0, neg = 0, pron = 0, caps = 0, digits = 0, urls = 0, emo = 0;
  double length_sum = 0;
  std::set<std::string> types;

  for (const std::string& t : tokens) {
    if (const LexiconEntry* e = lexicon.find(t)) {
      v[e->category] += e->intensity;
      polarity_sum += e->polarity;
      ++matched;
    }
    if (t.find('!') != std::string::npos) excl += 1;
    if (t.find('?') != std::string::npos) quest += 1;
    if (negation_tokens().count(t)) neg += 1;
    if (pronoun_tokens().count(t)) pron += 1;
    if (is_all_caps(t)) caps += 1;
    if (is_digits(t)) digits += 1;
    if (is_url_like(t)) urls += 1;
    if (emoticon_tokens().count(t)) emo += 1;
    length_sum += static_cast<double>(t.size());
    types.insert(t);
  }

  v.head(kEmotionCategories) /= n;
  v[kSentimentSlot] = matched > 0 ? polarity_sum / static_cast<double>(matched) : 0.0;

  v[kAuxOffset + 0] = excl / n;
  v[kAuxOffset + 1] = quest / n;
  v[kAuxOffset + 2] = neg / n;
  v[kAuxOffset + 3] = pron / n;
  v[kAuxOffset + 4] = caps / n;
  v[kAuxOffset + 5] = digits / n;
  v[kAuxOffset + 6] = urls / n;
  v[kAuxOffset + 7] = emo / n;
  v[kAuxOffset + 8] = n;
  v[kAuxOffset + 9] = length_sum / n;
  v[kAuxOffset + 10] = static_cast<double>(types.size()) / n;
  // slots [41..47) reserved, zero
  return v;
}

}  // namespace lnmt
