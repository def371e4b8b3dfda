// Drives the installed binary end to end. The harness provides the binary
// path via the CCFR_CLI environment variable.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "test_helpers.hpp"

using nlohmann::json;
using testutil::TempDir;

namespace {

std::string cli_path() {
  const char* env = std::getenv("CCFR_CLI");
  REQUIRE_MESSAGE(env != nullptr, "CCFR_CLI must point at the ccfr binary");
  return env;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const TempDir& tmp, const std::string& args) {
  const std::string out_file = tmp.file("_stdout");
  const std::string err_file = tmp.file("_stderr");
  const std::string cmd =
      cli_path() + " " + args + " > " + out_file + " 2> " + err_file;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testutil::read_text(out_file);
  r.err = testutil::read_text(err_file);
  return r;
}

// gen-fixture + build-db shared by several cases.
void prepare_pipeline(const TempDir& tmp) {
  REQUIRE(run(tmp, "gen-fixture --out-dir " + tmp.file("fx") +
                       " --classes 10 --train-per-class 4 --test-per-class 3 --dim 8 "
                       "--confusable 0.4 --seed 21")
              .exit_code == 0);
  REQUIRE(run(tmp, "build-db --embeddings " + tmp.file("fx/train.jsonl") + " --out " +
                       tmp.file("db.bin"))
              .exit_code == 0);
}

}  // namespace

TEST_CASE("help lists every subcommand and exits zero") {
  TempDir tmp;
  const RunResult r = run(tmp, "--help");
  CHECK(r.exit_code == 0);
  for (const char* name : {"build-db", "hierarchy", "fuse", "nms", "rerank", "eval", "sweep",
                           "loss-check", "gen-fixture"}) {
    CHECK_MESSAGE(r.out.find(name) != std::string::npos, name);
  }
}

TEST_CASE("unknown flags are rejected") {
  TempDir tmp;
  CHECK(run(tmp, "rerank --bogus 1").exit_code != 0);
  CHECK(run(tmp, "no-such-command").exit_code != 0);
}

TEST_CASE("the pipeline runs end to end and is seeded-deterministic") {
  TempDir tmp;
  prepare_pipeline(tmp);

  const std::string rerank_args = " --db " + tmp.file("db.bin") + " --preds " +
                                  tmp.file("fx/preds.jsonl") + " --queries " +
                                  tmp.file("fx/queries.jsonl");
  REQUIRE(run(tmp, "rerank" + rerank_args + " --out " + tmp.file("out1.jsonl")).exit_code ==
          0);
  REQUIRE(run(tmp, "rerank" + rerank_args + " --out " + tmp.file("out2.jsonl")).exit_code ==
          0);
  CHECK(testutil::read_text(tmp.file("out1.jsonl")) ==
        testutil::read_text(tmp.file("out2.jsonl")));

  // A fresh fixture from the same seed is byte-identical too.
  REQUIRE(run(tmp, "gen-fixture --out-dir " + tmp.file("fx2") +
                       " --classes 10 --train-per-class 4 --test-per-class 3 --dim 8 "
                       "--confusable 0.4 --seed 21")
              .exit_code == 0);
  CHECK(testutil::read_text(tmp.file("fx/train.jsonl")) ==
        testutil::read_text(tmp.file("fx2/train.jsonl")));
  CHECK(testutil::read_text(tmp.file("fx/preds.jsonl")) ==
        testutil::read_text(tmp.file("fx2/preds.jsonl")));

  REQUIRE(run(tmp, "eval" + rerank_args + " --out " + tmp.file("report.json")).exit_code ==
          0);
  const json report = json::parse(testutil::read_text(tmp.file("report.json")));
  CHECK(report["ccfr"]["gate_counts"]["softmax_kept"].get<int>() > 0);
}

TEST_CASE("threads do not change rerank output") {
  TempDir tmp;
  prepare_pipeline(tmp);
  const std::string rerank_args = " --db " + tmp.file("db.bin") + " --preds " +
                                  tmp.file("fx/preds.jsonl") + " --queries " +
                                  tmp.file("fx/queries.jsonl");
  REQUIRE(run(tmp, "rerank" + rerank_args + " --threads 1 --out " + tmp.file("s.jsonl"))
              .exit_code == 0);
  REQUIRE(run(tmp, "rerank" + rerank_args + " --threads 4 --out " + tmp.file("p.jsonl"))
              .exit_code == 0);
  CHECK(testutil::read_text(tmp.file("s.jsonl")) == testutil::read_text(tmp.file("p.jsonl")));
}

TEST_CASE("malformed input lines are reported with their line number") {
  TempDir tmp;
  std::string text;
  for (int i = 0; i < 16; ++i) {
    text += R"({"id": "r)" + std::to_string(i) + R"(", "label": 0, "embedding": [1.0]})" "\n";
  }
  text += "{broken\n";
  testutil::write_text(tmp.file("bad.jsonl"), text);
  const RunResult r = run(tmp, "build-db --embeddings " + tmp.file("bad.jsonl") + " --out " +
                                   tmp.file("db.bin"));
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("line 17") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(tmp.file("db.bin")));
}

TEST_CASE("invalid config values name the field") {
  TempDir tmp;
  prepare_pipeline(tmp);
  const RunResult r = run(tmp, "rerank --db " + tmp.file("db.bin") + " --preds " +
                                   tmp.file("fx/preds.jsonl") + " --queries " +
                                   tmp.file("fx/queries.jsonl") + " --topn 0 --out " +
                                   tmp.file("out.jsonl"));
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("topn") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(tmp.file("out.jsonl")));
}

TEST_CASE("flags override config-file values") {
  TempDir tmp;
  prepare_pipeline(tmp);
  testutil::write_text(tmp.file("cfg.json"), R"({"topn": 3, "t_sf": 0.5})");
  const std::string base = "rerank --db " + tmp.file("db.bin") + " --preds " +
                           tmp.file("fx/preds.jsonl") + " --queries " +
                           tmp.file("fx/queries.jsonl") + " --config " + tmp.file("cfg.json");

  REQUIRE(run(tmp, base + " --out " + tmp.file("from_file.jsonl")).exit_code == 0);
  std::string first_line = testutil::read_text(tmp.file("from_file.jsonl"));
  first_line.resize(first_line.find('\n'));
  CHECK(json::parse(first_line)["scores"].size() == 3);

  REQUIRE(run(tmp, base + " --topn 4 --out " + tmp.file("from_flag.jsonl")).exit_code == 0);
  first_line = testutil::read_text(tmp.file("from_flag.jsonl"));
  first_line.resize(first_line.find('\n'));
  CHECK(json::parse(first_line)["scores"].size() == 4);
}

TEST_CASE("sweep emits the requested grid") {
  TempDir tmp;
  prepare_pipeline(tmp);
  REQUIRE(run(tmp, "sweep --db " + tmp.file("db.bin") + " --preds " +
                       tmp.file("fx/preds.jsonl") + " --queries " +
                       tmp.file("fx/queries.jsonl") + " --topn 2,3 --t-sf 0.4:0.5:0.05" +
                       " --t-sc 0.6,0.7 --out " + tmp.file("grid.csv"))
              .exit_code == 0);
  const std::string csv = testutil::read_text(tmp.file("grid.csv"));
  int rows = 0;
  for (char c : csv) {
    if (c == '\n') ++rows;
  }
  CHECK(rows == 1 + 2 * 3 * 2);
}

TEST_CASE("hierarchy and nms subcommands") {
  TempDir tmp;
  prepare_pipeline(tmp);
  REQUIRE(run(tmp, "hierarchy --embeddings " + tmp.file("fx/train.jsonl") +
                       " --num-super 3 --out " + tmp.file("h.json"))
              .exit_code == 0);
  const json h = json::parse(testutil::read_text(tmp.file("h.json")));
  CHECK(h["num_super"] == 3);
  CHECK(h["parent"].size() == 10);

  REQUIRE(run(tmp, "nms --gen-anchors --image-size 96 --scales 96 --strides 96 --out " +
                       tmp.file("anchors.jsonl"))
              .exit_code == 0);
  const json anchor = json::parse(testutil::read_text(tmp.file("anchors.jsonl")));
  CHECK(anchor["box"] == json::array({0.0, 0.0, 96.0, 96.0}));

  REQUIRE(run(tmp, "nms --boxes " + tmp.file("anchors.jsonl") + " --out " +
                       tmp.file("kept.jsonl"))
              .exit_code == 0);
  CHECK(run(tmp, "nms --out " + tmp.file("x.jsonl")).exit_code != 0);
}

TEST_CASE("loss-check prints a table and honors the tolerance") {
  TempDir tmp;
  const RunResult ok = run(tmp, "loss-check --trials 5");
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("cross_entropy") != std::string::npos);
  CHECK(ok.out.find("triplet_loss") != std::string::npos);

  const RunResult strict = run(tmp, "loss-check --trials 5 --tolerance 1e-18");
  CHECK(strict.exit_code != 0);
  CHECK(strict.out.find("FAIL") != std::string::npos);
}
