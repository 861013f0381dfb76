#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lnmt/corpus.hpp"
#include "lnmt/synth.hpp"

using namespace lnmt;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("lnmt_corpus_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("minimal unlabeled record loads with zero reports and no gold label") {
  TempDir dir;
  write_file(dir.file("c.jsonl"),
             R"({"id":"a1","article":"x","reports":[],"split":"unlabeled"})"
             "\n");
  Corpus c = load_corpus(dir.file("c.jsonl"));
  REQUIRE(c.samples.size() == 1);
  CHECK(c.samples[0].id == "a1");
  CHECK(c.samples[0].reports.empty());
  CHECK_FALSE(c.samples[0].gold_label.has_value());
  CHECK(c.samples[0].split == Split::kUnlabeled);
}

TEST_CASE("duplicate id reports the offending line") {
  TempDir dir;
  std::string lines;
  for (int i = 1; i <= 4; ++i) {
    lines += R"({"id":"s)" + std::to_string(i) + R"(","article":"a","reports":[],"split":"unlabeled"})" + "\n";
  }
  lines += R"({"id":"s2","article":"a","reports":[],"split":"unlabeled"})" "\n";
  write_file(dir.file("dup.jsonl"), lines);
  CHECK_THROWS_WITH_AS(load_corpus(dir.file("dup.jsonl")), "duplicate id at line 5", Error);
}

TEST_CASE("label outside {0,1} and malformed lines are rejected by line number") {
  TempDir dir;
  write_file(dir.file("bad_label.jsonl"),
             R"({"id":"a","article":"x","reports":[],"label":2,"split":"train"})" "\n");
  CHECK_THROWS_AS(load_corpus(dir.file("bad_label.jsonl")), Error);

  write_file(dir.file("bad_json.jsonl"), "{not json\n");
  try {
    load_corpus(dir.file("bad_json.jsonl"));
    FAIL("expected a malformed-line error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  write_file(dir.file("missing_label.jsonl"),
             R"({"id":"a","article":"x","reports":[],"split":"train"})" "\n");
  CHECK_THROWS_AS(load_corpus(dir.file("missing_label.jsonl")), Error);

  write_file(dir.file("label_on_unlabeled.jsonl"),
             R"({"id":"a","article":"x","reports":[],"label":1,"split":"unlabeled"})" "\n");
  CHECK_THROWS_AS(load_corpus(dir.file("label_on_unlabeled.jsonl")), Error);
}

TEST_CASE("paper-shaped corpus round-trips with identical counts") {
  SynthConfig cfg;
  cfg.n_labeled = 2440;
  cfg.n_val = 1000;
  cfg.n_test = 1740;
  cfg.n_unlabeled = 22981;
  cfg.report_count_min = 0;
  cfg.report_count_max = 2;
  cfg.seed = 7;
  SynthResult synth = generate_synthetic(cfg);

  TempDir dir;
  write_corpus(synth.corpus, dir.file("paper.jsonl"));
  Corpus loaded = load_corpus(dir.file("paper.jsonl"));

  CHECK(loaded.count_of(Split::kTrain) == 2440);
  CHECK(loaded.count_of(Split::kVal) == 1000);
  CHECK(loaded.count_of(Split::kTest) == 1740);
  CHECK(loaded.count_of(Split::kUnlabeled) == 22981);

  const SplitStats stats = split_counts(loaded);
  CHECK(stats.of(Split::kTrain).fake == 1220);
  CHECK_FALSE(stats.of(Split::kTrain).imbalanced);
}

TEST_CASE("round trip preserves ids, texts and labels") {
  SynthConfig cfg;
  cfg.n_labeled = 20;
  cfg.n_val = 10;
  cfg.n_test = 10;
  cfg.n_unlabeled = 30;
  cfg.seed = 3;
  Corpus original = generate_synthetic(cfg).corpus;

  TempDir dir;
  write_corpus(original, dir.file("a.jsonl"));
  Corpus loaded = load_corpus(dir.file("a.jsonl"));
  REQUIRE(loaded.samples.size() == original.samples.size());
  for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
    CHECK(loaded.samples[i].id == original.samples[i].id);
    CHECK(loaded.samples[i].article == original.samples[i].article);
    CHECK(loaded.samples[i].gold_label == original.samples[i].gold_label);
    CHECK(loaded.samples[i].split == original.samples[i].split);
    REQUIRE(loaded.samples[i].reports.size() == original.samples[i].reports.size());
    for (std::size_t r = 0; r < loaded.samples[i].reports.size(); ++r) {
      CHECK(loaded.samples[i].reports[r].text == original.samples[i].reports[r].text);
    }
  }

  // And the write is byte-stable.
  write_corpus(loaded, dir.file("b.jsonl"));
  CHECK(read_file(dir.file("a.jsonl")) == read_file(dir.file("b.jsonl")));
}

TEST_CASE("split_counts flags imbalance and reports ratios") {
  Corpus c;
  auto add = [&](const std::string& id, int label) {
    Sample s;
    s.id = id;
    s.article = "a";
    s.split = Split::kTrain;
    s.gold_label = label;
    c.samples.push_back(s);
  };

  SUBCASE("balanced 10+10 train gives ratio 0.5") {
    for (int i = 0; i < 10; ++i) add("f" + std::to_string(i), 1);
    for (int i = 0; i < 10; ++i) add("r" + std::to_string(i), 0);
    const SplitStats stats = split_counts(c);
    CHECK(stats.of(Split::kTrain).fake_ratio == doctest::Approx(0.5));
    CHECK_FALSE(stats.of(Split::kTrain).imbalanced);
  }

  SUBCASE("3 fake / 1 real gives ratio 0.75 with the imbalance flag") {
    add("f1", 1);
    add("f2", 1);
    add("f3", 1);
    add("r1", 0);
    const SplitStats stats = split_counts(c);
    CHECK(stats.of(Split::kTrain).fake_ratio == doctest::Approx(0.75));
    CHECK(stats.of(Split::kTrain).imbalanced);
  }
}

TEST_CASE("hidden labels round-trip through their side file") {
  TempDir dir;
  HiddenLabels labels{{"u1", 1}, {"u2", 0}, {"u3", 1}};
  write_hidden_labels(labels, dir.file("h.jsonl"));
  HiddenLabels loaded = load_hidden_labels(dir.file("h.jsonl"));
  CHECK(loaded == labels);
}
