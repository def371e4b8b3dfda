#include "io.hpp"

#include <filesystem>

#include "doctest.h"
#include "json.hpp"
#include "rng.hpp"
#include "test_helpers.hpp"

using nlohmann::json;
using testutil::TempDir;

TEST_CASE("embedding jsonl round trip") {
  TempDir tmp;
  std::vector<ccfr::EmbeddingRecord> records = {
      {"a", 0, {1.0, -0.25, 3.5e-3}},
      {"b", 4, {0.0, 1.0, 0.0}},
  };
  ccfr::io::write_embeddings_jsonl(tmp.file("e.jsonl"), records);
  const auto back = ccfr::io::read_embeddings_jsonl(tmp.file("e.jsonl"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "a");
  CHECK(back[0].label == 0);
  CHECK(back[0].embedding == records[0].embedding);
  CHECK(back[1].embedding == records[1].embedding);
}

TEST_CASE("malformed jsonl reports its line number") {
  TempDir tmp;
  std::string text;
  for (int i = 0; i < 16; ++i) {
    text += R"({"id": "r)" + std::to_string(i) + R"(", "label": 0, "embedding": [1.0]})" + "\n";
  }
  text += "{not json\n";
  testutil::write_text(tmp.file("bad.jsonl"), text);
  CHECK_THROWS_WITH_AS(ccfr::io::read_embeddings_jsonl(tmp.file("bad.jsonl")),
                       doctest::Contains("line 17"), ccfr::io::ParseError);
}

TEST_CASE("schema violations report their line and field") {
  TempDir tmp;
  testutil::write_text(tmp.file("bad.jsonl"), R"({"id": "a", "embedding": [1.0]})"
                                              "\n");
  CHECK_THROWS_WITH_AS(ccfr::io::read_embeddings_jsonl(tmp.file("bad.jsonl")),
                       doctest::Contains("label"), ccfr::io::ParseError);
}

TEST_CASE("blank lines are skipped but count toward line numbers") {
  TempDir tmp;
  testutil::write_text(tmp.file("e.jsonl"),
                       "\n" R"({"id": "a", "label": 1, "embedding": [2.0]})" "\n\n");
  const auto records = ccfr::io::read_embeddings_jsonl(tmp.file("e.jsonl"));
  REQUIRE(records.size() == 1);
  CHECK(records[0].label == 1);
}

TEST_CASE("predictions accept logits or probs but not both") {
  TempDir tmp;
  testutil::write_text(tmp.file("p.jsonl"),
                       R"({"id": "a", "logits": [0.0, 0.0]})" "\n"
                       R"({"id": "b", "probs": [0.25, 0.75]})" "\n");
  const auto preds = ccfr::io::read_predictions_jsonl(tmp.file("p.jsonl"));
  REQUIRE(preds.size() == 2);
  CHECK(preds[0].probs[0] == doctest::Approx(0.5));
  CHECK(preds[1].probs[1] == 0.75);

  testutil::write_text(tmp.file("both.jsonl"),
                       R"({"id": "a", "logits": [0.0], "probs": [1.0]})" "\n");
  CHECK_THROWS_WITH_AS(ccfr::io::read_predictions_jsonl(tmp.file("both.jsonl")),
                       doctest::Contains("exactly one"), ccfr::io::ParseError);

  testutil::write_text(tmp.file("sum.jsonl"), R"({"id": "a", "probs": [0.2, 0.2]})" "\n");
  CHECK_THROWS_WITH_AS(ccfr::io::read_predictions_jsonl(tmp.file("sum.jsonl")),
                       doctest::Contains("sum to 1"), ccfr::io::ParseError);

  testutil::write_text(tmp.file("neg.jsonl"), R"({"id": "a", "probs": [1.2, -0.2]})" "\n");
  CHECK_THROWS_AS(ccfr::io::read_predictions_jsonl(tmp.file("neg.jsonl")),
                  ccfr::io::ParseError);
}

TEST_CASE("box jsonl round trip and validation") {
  TempDir tmp;
  std::vector<ccfr::io::BoxRecord> records;
  ccfr::io::BoxRecord r;
  r.id = "a0";
  r.box.x1 = 1.5;
  r.box.y1 = 2.0;
  r.box.x2 = 10.0;
  r.box.y2 = 12.0;
  r.box.scale_index = 1;
  r.box.score = 0.75;
  records.push_back(r);
  ccfr::io::write_boxes_jsonl(tmp.file("b.jsonl"), records);
  const auto back = ccfr::io::read_boxes_jsonl(tmp.file("b.jsonl"));
  REQUIRE(back.size() == 1);
  CHECK(back[0].id == "a0");
  CHECK(back[0].box.x1 == 1.5);
  CHECK(back[0].box.score == 0.75);
  CHECK(back[0].box.scale_index == 1);

  testutil::write_text(tmp.file("flat.jsonl"),
                       R"({"id": "x", "scale": 0, "box": [0, 0, 0, 5], "score": 0.5})" "\n");
  CHECK_THROWS_WITH_AS(ccfr::io::read_boxes_jsonl(tmp.file("flat.jsonl")),
                       doctest::Contains("positive area"), ccfr::io::ParseError);
}

TEST_CASE("hierarchy json round trip") {
  TempDir tmp;
  ccfr::Hierarchy h;
  h.num_children = 4;
  h.num_super = 2;
  h.parent = {0, 0, 1, 1};
  ccfr::io::write_hierarchy_json(tmp.file("h.json"), h);
  const auto back = ccfr::io::read_hierarchy_json(tmp.file("h.json"));
  CHECK(back.num_children == 4);
  CHECK(back.num_super == 2);
  CHECK(back.parent == h.parent);
  for (int child = 0; child < 4; ++child) {
    CHECK(ccfr::super_label(back, child) == ccfr::super_label(h, child));
  }

  testutil::write_text(tmp.file("bad.json"),
                       R"({"num_children": 3, "num_super": 2, "parent": [0, 0, 0]})");
  CHECK_THROWS_AS(ccfr::io::read_hierarchy_json(tmp.file("bad.json")),
                  std::invalid_argument);
}

TEST_CASE("fusion weights json round trip") {
  TempDir tmp;
  ccfr::FusionWeights w;
  ccfr::ScaleFusion s;
  s.matrix = {{1.0, 0.0}, {0.0, 1.0}, {0.5, -0.5}, {2.0, 3.0}};
  s.bias = {0.1, -0.2};
  w.scales = {s};
  ccfr::io::write_fusion_weights_json(tmp.file("w.json"), w);
  const auto back = ccfr::io::read_fusion_weights_json(tmp.file("w.json"));
  REQUIRE(back.scales.size() == 1);
  CHECK(back.scales[0].matrix == s.matrix);
  CHECK(back.scales[0].bias == s.bias);
}

TEST_CASE("bundle jsonl parsing") {
  TempDir tmp;
  testutil::write_text(
      tmp.file("b.jsonl"),
      R"({"id": "q", "label": 3, "global_feature": [1, 0], "local_features": [[[0.5, 0.5]], [[0, 1], [1, 0]]]})"
      "\n"
      R"({"id": "r", "global_feature": [0, 1], "local_features": []})"
      "\n");
  const auto bundles = ccfr::io::read_bundles_jsonl(tmp.file("b.jsonl"));
  REQUIRE(bundles.size() == 2);
  CHECK(bundles[0].label == 3);
  REQUIRE(bundles[0].bundle.local_features.size() == 2);
  CHECK(bundles[0].bundle.local_features[1].size() == 2);
  CHECK(bundles[1].label == 0);
  CHECK(bundles[1].bundle.local_features.empty());
}

TEST_CASE("rerank config parsing applies defaults and validates") {
  const ccfr::RerankConfig defaults = ccfr::io::parse_rerank_config_json("");
  CHECK(defaults.topn == 5);
  CHECK(defaults.topm == 50);
  CHECK(defaults.t_sf == 0.5);
  CHECK(defaults.t_sc == 0.7);
  CHECK(defaults.alpha == 0.0);
  CHECK(defaults.beta == 1.0);
  CHECK(defaults.topm_mode == ccfr::TopmMode::fixed_topm);

  const ccfr::RerankConfig cfg = ccfr::io::parse_rerank_config_json(
      R"({"topn": 2, "t_sf": 0.75, "topm_mode": "threshold_only"})");
  CHECK(cfg.topn == 2);
  CHECK(cfg.t_sf == 0.75);
  CHECK(cfg.topm_mode == ccfr::TopmMode::threshold_only);
  CHECK(cfg.topm == 50);

  CHECK_THROWS_WITH_AS(ccfr::io::parse_rerank_config_json(R"({"topn": 0})"),
                       doctest::Contains("topn"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(ccfr::io::parse_rerank_config_json(R"({"bogus": 1})"),
                       doctest::Contains("bogus"), std::invalid_argument);
  CHECK_THROWS_AS(ccfr::io::parse_rerank_config_json(R"({"topm_mode": "sometimes"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ccfr::io::parse_rerank_config_json("{nope"), ccfr::io::ParseError);

  // Round trip through the serializer.
  const auto echoed = ccfr::io::parse_rerank_config_json(ccfr::io::rerank_config_to_json(cfg));
  CHECK(echoed.topn == cfg.topn);
  CHECK(echoed.t_sf == cfg.t_sf);
  CHECK(echoed.topm_mode == cfg.topm_mode);
}

TEST_CASE("outcome jsonl carries gates and per-class scores") {
  TempDir tmp;
  ccfr::RerankOutcome o;
  o.id = "q1";
  o.predicted_class = 7;
  o.gate = ccfr::Gate::reranked;
  o.scores = {{7, 0.625}, {12, 0.375}};
  ccfr::io::write_outcomes_jsonl(tmp.file("o.jsonl"), {o});

  const json j = json::parse(testutil::read_text(tmp.file("o.jsonl")));
  CHECK(j["id"] == "q1");
  CHECK(j["predicted_class"] == 7);
  CHECK(j["gate"] == "reranked");
  CHECK(j["scores"]["7"] == 0.625);
  CHECK(j["scores"]["12"] == 0.375);
}

TEST_CASE("eval report json shape") {
  ccfr::EvalReport report;
  report.top1_accuracy = 0.5;
  report.topn_accuracy = 0.75;
  report.gates.softmax_kept = 2;
  report.gates.reranked = 1;
  report.gates.fallback_softmax = 1;
  report.confusion = {{0, 0, 2}, {1, 0, 1}};
  const json j = json::parse(ccfr::io::eval_report_to_json(report));
  CHECK(j["top1_accuracy"] == 0.5);
  CHECK(j["gate_counts"]["softmax_kept"] == 2);
  CHECK(j["confusion"][1]["true"] == 1);
  CHECK(j["confusion"][1]["count"] == 1);
}

TEST_CASE("atomic write leaves no temp file behind") {
  TempDir tmp;
  ccfr::io::atomic_write(tmp.file("out.txt"), "payload");
  CHECK(testutil::read_text(tmp.file("out.txt")) == "payload");
  CHECK_FALSE(std::filesystem::exists(tmp.file("out.txt") + ".tmp"));

  CHECK_THROWS_AS(ccfr::io::atomic_write(tmp.file("no_dir/out.txt"), "x"),
                  std::runtime_error);
}
