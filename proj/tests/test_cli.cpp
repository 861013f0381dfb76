#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "nlohmann/json.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lnmt_cli_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LNMT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::size_t line_count(const std::string& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("help exits zero, unknown flags exit nonzero") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("generate --help") == 0);
  CHECK(run_cli("--definitely-not-a-flag") != 0);
  CHECK(run_cli("generate --bogus x") != 0);
  CHECK(run_cli("") != 0);  // a subcommand is required
}

TEST_CASE("generate -> pretrain -> refine -> evaluate -> annotate round trip") {
  TempDir dir;
  const std::string corpus_dir = dir.file("corpus");

  REQUIRE(run_cli("generate --out " + corpus_dir +
                  " --n-labeled 24 --n-unlabeled 30 --n-val 12 --n-test 12 --p-sig 0.9"
                  " --vocab-size 120 --seed 5") == 0);
  CHECK(fs::exists(corpus_dir + "/corpus.jsonl"));
  CHECK(fs::exists(corpus_dir + "/meta.json"));
  CHECK(fs::exists(corpus_dir + "/lexicon.tsv"));
  CHECK(fs::exists(corpus_dir + "/hidden_labels.jsonl"));
  CHECK(fs::exists(corpus_dir + "/weak_labels_noisy.jsonl"));
  CHECK(line_count(corpus_dir + "/corpus.jsonl") == 78);
  CHECK(line_count(corpus_dir + "/weak_labels_noisy.jsonl") == 30);

  const std::string run_dir = dir.file("run");
  REQUIRE(run_cli("pretrain --corpus " + corpus_dir + "/corpus.jsonl --lexicon " + corpus_dir +
                  "/lexicon.tsv --out-dir " + run_dir +
                  " --desk --set stage1.epochs=4 --set encoder.d_model=8"
                  " --set encoder.max_tokens=10 --set encoder.max_sequences=4") == 0);
  CHECK(fs::exists(run_dir + "/stage1.ckpt"));
  CHECK(fs::exists(run_dir + "/stage1_metrics.jsonl"));

  REQUIRE(run_cli("refine --corpus " + corpus_dir + "/corpus.jsonl --lexicon " + corpus_dir +
                  "/lexicon.tsv --stage1 " + run_dir + "/stage1.ckpt --hidden " + corpus_dir +
                  "/hidden_labels.jsonl --out-dir " + run_dir +
                  " --desk --set stage1.epochs=4 --set stage2.generations=2"
                  " --set encoder.d_model=8 --set encoder.max_tokens=10"
                  " --set encoder.max_sequences=4 --set stage2.batch=16") == 0);
  CHECK(fs::exists(run_dir + "/stage2.ckpt"));
  CHECK(line_count(run_dir + "/stage2_diagnostics.jsonl") == 2);

  const std::string metrics_path = dir.file("metrics.json");
  REQUIRE(run_cli("evaluate --ckpt " + run_dir + "/stage2.ckpt --corpus " + corpus_dir +
                  "/corpus.jsonl --split test --which best --out " + metrics_path) == 0);
  {
    std::ifstream in(metrics_path);
    const auto j = nlohmann::json::parse(in);
    CHECK(j.contains("accuracy"));
    CHECK(j.contains("auc_roc"));
    CHECK(j.contains("fake"));
    CHECK(j.contains("real"));
    CHECK(j.contains("confusion"));
    CHECK(j["n_eval"] == 12);
    CHECK(j["reference"]["published_accuracy"] == doctest::Approx(82.6));
    CHECK(j["reference"]["published_auc_roc"] == doctest::Approx(87.1));
  }

  const std::string weak_path = dir.file("weak_labels.jsonl");
  REQUIRE(run_cli("annotate --ckpt " + run_dir + "/stage1.ckpt --corpus " + corpus_dir +
                  "/corpus.jsonl --out " + weak_path) == 0);
  CHECK(line_count(weak_path) == 30);
  {
    std::ifstream in(weak_path);
    std::string line;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j.contains("id"));
      const double y = j.at("y_u").get<double>();
      CHECK(y >= 0.0);
      CHECK(y <= 1.0);
    }
  }

  SUBCASE("failures are single-line nonzero exits") {
    CHECK(run_cli("evaluate --ckpt missing.ckpt --corpus " + corpus_dir + "/corpus.jsonl") != 0);
    CHECK(run_cli("pretrain --corpus missing.jsonl --lexicon missing.tsv") != 0);
  }
}

TEST_CASE("the checkpoint dir env var supplies the default output directory") {
  TempDir dir;
  const std::string corpus_dir = dir.file("corpus");
  REQUIRE(run_cli("generate --out " + corpus_dir +
                  " --n-labeled 12 --n-unlabeled 6 --n-val 6 --n-test 6 --vocab-size 100"
                  " --seed 6") == 0);

  const std::string env_dir = dir.file("env_ckpts");
  const std::string cmd = "LNMT_CHECKPOINT_DIR=" + env_dir + " " + std::string(LNMT_CLI_PATH) +
                          " pretrain --corpus " + corpus_dir + "/corpus.jsonl --lexicon " +
                          corpus_dir +
                          "/lexicon.tsv --desk --set stage1.epochs=2 --set encoder.d_model=8"
                          " --set encoder.max_tokens=8 --set encoder.max_sequences=4"
                          " >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(env_dir + "/stage1.ckpt"));
}
