#include "lnmt/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "lnmt/common.hpp"
#include "nlohmann/json.hpp"

namespace lnmt {

using json = nlohmann::json;

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kUnlabeled: return "unlabeled";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  if (name == "unlabeled") return Split::kUnlabeled;
  throw Error("unknown split name: " + name);
}

std::vector<std::size_t> Corpus::indices_of(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == s) out.push_back(i);
  }
  return out;
}

std::size_t Corpus::count_of(Split s) const { return indices_of(s).size(); }

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file: " + path);

  Corpus corpus;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("malformed JSON at line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) throw Error("malformed line " + std::to_string(line_no) + ": not an object");

    Sample s;
    try {
      s.id = obj.at("id").get<std::string>();
      s.article = obj.at("article").get<std::string>();
      for (const auto& r : obj.at("reports")) {
        s.reports.push_back(Report{r.get<std::string>()});
      }
      s.split = split_from_name(obj.at("split").get<std::string>());
    } catch (const json::exception& e) {
      throw Error("malformed record at line " + std::to_string(line_no) + ": " + e.what());
    }

    const bool labeled_split = s.split != Split::kUnlabeled;
    if (obj.contains("label")) {
      if (!obj["label"].is_number_integer()) {
        throw Error("label outside {0,1} at line " + std::to_string(line_no));
      }
      const int label = obj["label"].get<int>();
      if (label != 0 && label != 1) {
        throw Error("label outside {0,1} at line " + std::to_string(line_no));
      }
      if (!labeled_split) {
        throw Error("unlabeled sample carries a label at line " + std::to_string(line_no));
      }
      s.gold_label = label;
    } else if (labeled_split) {
      throw Error("missing label for " + std::string(split_name(s.split)) +
                  " sample at line " + std::to_string(line_no));
    }

    if (!seen_ids.insert(s.id).second) {
      throw Error("duplicate id at line " + std::to_string(line_no));
    }
    corpus.samples.push_back(std::move(s));
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (const Sample& s : corpus.samples) {
    nlohmann::ordered_json obj;
    obj["id"] = s.id;
    obj["article"] = s.article;
    json reports = json::array();
    for (const Report& r : s.reports) reports.push_back(r.text);
    obj["reports"] = reports;
    if (s.gold_label) obj["label"] = *s.gold_label;
    obj["split"] = split_name(s.split);
    out << obj.dump() << '\n';
  }
}

SplitStats split_counts(const Corpus& corpus, double tolerance) {
  SplitStats stats;
  stats.total = corpus.samples.size();
  for (const Sample& s : corpus.samples) {
    auto& ps = stats.per_split[static_cast<std::size_t>(s.split)];
    ++ps.count;
    if (s.gold_label) {
      (*s.gold_label == 1 ? ps.fake : ps.real) += 1;
    }
  }
  for (auto& ps : stats.per_split) {
    const std::size_t labeled = ps.fake + ps.real;
    if (labeled > 0) {
      ps.fake_ratio = static_cast<double>(ps.fake) / static_cast<double>(labeled);
      ps.imbalanced = std::abs(ps.fake_ratio - 0.5) > tolerance;
    }
  }
  return stats;
}

HiddenLabels load_hidden_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open hidden label file: " + path);
  HiddenLabels labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
      labels[obj.at("id").get<std::string>()] = obj.at("label").get<int>();
    } catch (const json::exception& e) {
      throw Error("malformed hidden label at line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return labels;
}

void write_hidden_labels(const HiddenLabels& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  std::vector<std::pair<std::string, int>> rows(labels.begin(), labels.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [id, label] : rows) {
    nlohmann::ordered_json obj;
    obj["id"] = id;
    obj["label"] = label;
    out << obj.dump() << '\n';
  }
}

}  // namespace lnmt
