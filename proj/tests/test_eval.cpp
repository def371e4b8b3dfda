#include "eval.hpp"

#include <cmath>

#include "doctest.h"
#include "fixture.hpp"
#include "rng.hpp"

using ccfr::Database;
using ccfr::EvalReport;
using ccfr::Gate;
using ccfr::RerankConfig;
using ccfr::RerankOutcome;
using ccfr::TruthMap;

namespace {

RerankOutcome outcome(const std::string& id, int predicted, std::vector<int> candidates,
                      Gate gate) {
  RerankOutcome o;
  o.id = id;
  o.predicted_class = predicted;
  for (int c : candidates) o.scores.emplace_back(c, 0.1);
  o.gate = gate;
  return o;
}

ccfr::Fixture small_fixture(std::uint64_t seed, double confusable = 0.4) {
  ccfr::FixtureSpec spec;
  spec.num_classes = 12;
  spec.train_per_class = 5;
  spec.test_per_class = 4;
  spec.dim = 8;
  spec.confusable_fraction = confusable;
  spec.seed = seed;
  return ccfr::generate_fixture(spec);
}

}  // namespace

TEST_CASE("accuracy on degenerate inputs") {
  TruthMap truth = {{"a", 0}, {"b", 1}};
  const std::vector<RerankOutcome> all_correct = {
      outcome("a", 0, {0, 1}, Gate::softmax_kept),
      outcome("b", 1, {1, 0}, Gate::reranked),
  };
  EvalReport r = ccfr::accuracy(all_correct, truth);
  CHECK(r.top1_accuracy == 1.0);
  CHECK(r.topn_accuracy == 1.0);
  CHECK(r.gates.softmax_kept == 1);
  CHECK(r.gates.reranked == 1);

  const std::vector<RerankOutcome> all_wrong = {
      outcome("a", 1, {1, 0}, Gate::softmax_kept),
      outcome("b", 0, {0, 1}, Gate::softmax_kept),
  };
  CHECK(ccfr::accuracy(all_wrong, truth).top1_accuracy == 0.0);
}

TEST_CASE("accuracy matches a hand tally") {
  TruthMap truth;
  for (int i = 0; i < 10; ++i) truth["q" + std::to_string(i)] = i % 3;
  std::vector<RerankOutcome> outcomes;
  // 6 of 10 predicted correctly; 8 of 10 carry the truth among candidates.
  for (int i = 0; i < 10; ++i) {
    const int t = i % 3;
    const bool correct = i < 6;
    const bool in_candidates = i < 8;
    const int predicted = correct ? t : (t + 1) % 3;
    std::vector<int> candidates = {predicted};
    if (!correct && in_candidates) candidates.push_back(t);
    outcomes.push_back(
        outcome("q" + std::to_string(i), predicted, candidates,
                i % 2 == 0 ? Gate::softmax_kept : Gate::reranked));
  }
  const EvalReport r = ccfr::accuracy(outcomes, truth);
  CHECK(r.top1_accuracy == doctest::Approx(0.6));
  CHECK(r.topn_accuracy == doctest::Approx(0.8));
  CHECK(r.gates.softmax_kept == 5);
  CHECK(r.gates.reranked == 5);
  CHECK(r.gates.total() == 10);

  // Confusion cells are sorted and count every (true, predicted) pair.
  std::int64_t total = 0;
  for (std::size_t i = 0; i + 1 < r.confusion.size(); ++i) {
    const auto& a = r.confusion[i];
    const auto& b = r.confusion[i + 1];
    CHECK((a.true_class < b.true_class ||
           (a.true_class == b.true_class && a.predicted_class < b.predicted_class)));
  }
  for (const auto& cell : r.confusion) total += cell.count;
  CHECK(total == 10);
}

TEST_CASE("accuracy requires every id in the truth map") {
  const std::vector<RerankOutcome> outcomes = {outcome("nope", 0, {0}, Gate::softmax_kept)};
  CHECK_THROWS_WITH_AS(ccfr::accuracy(outcomes, {}), doctest::Contains("nope"),
                       std::runtime_error);
}

TEST_CASE("compare_modes covers the three pipelines") {
  const auto fx = small_fixture(19);
  const Database db = Database::build(fx.train);
  const auto index = ccfr::make_embedding_index(fx.queries);
  const TruthMap truth = ccfr::make_truth_map(fx.queries);
  const RerankConfig cfg;

  const auto cmp = ccfr::compare_modes(fx.preds, db, index, cfg, truth);
  // Clean clusters: the nearest neighbor shares the query's label.
  CHECK(cmp.retrieval_only.top1_accuracy == 1.0);
  CHECK(cmp.ccfr.top1_accuracy >= cmp.classification_only.top1_accuracy);
  CHECK(cmp.retrieval_only.gates.total() == static_cast<std::int64_t>(fx.preds.size()));
  CHECK(cmp.classification_only.gates.softmax_kept ==
        static_cast<std::int64_t>(fx.preds.size()));
}

TEST_CASE("a zero gate threshold makes the pipeline equal classification") {
  const auto fx = small_fixture(23);
  const Database db = Database::build(fx.train);
  const auto index = ccfr::make_embedding_index(fx.queries);
  const TruthMap truth = ccfr::make_truth_map(fx.queries);
  RerankConfig cfg;
  cfg.t_sf = 0.0;
  const auto cmp = ccfr::compare_modes(fx.preds, db, index, cfg, truth);
  CHECK(cmp.ccfr.top1_accuracy == cmp.classification_only.top1_accuracy);
  CHECK(cmp.ccfr.topn_accuracy == cmp.classification_only.topn_accuracy);
}

TEST_CASE("the classification report ignores the database") {
  const auto fx = small_fixture(29);
  const auto index = ccfr::make_embedding_index(fx.queries);
  const TruthMap truth = ccfr::make_truth_map(fx.queries);
  const RerankConfig cfg;

  const Database real = Database::build(fx.train);
  const Database decoy = Database::build(small_fixture(31).train);
  const auto a = ccfr::compare_modes(fx.preds, real, index, cfg, truth);
  const auto b = ccfr::compare_modes(fx.preds, decoy, index, cfg, truth);
  CHECK(a.classification_only.top1_accuracy == b.classification_only.top1_accuracy);
  CHECK(a.classification_only.topn_accuracy == b.classification_only.topn_accuracy);
}

TEST_CASE("a single-cell sweep equals a direct batch accuracy") {
  const auto fx = small_fixture(37);
  const Database db = Database::build(fx.train);
  const auto index = ccfr::make_embedding_index(fx.queries);
  const TruthMap truth = ccfr::make_truth_map(fx.queries);
  RerankConfig cfg;

  const auto grid = ccfr::sweep(fx.preds, db, index, truth, cfg, {4}, {0.6}, {0.65});
  REQUIRE(grid.cells.size() == 1);

  cfg.topn = 4;
  cfg.t_sf = 0.6;
  cfg.t_sc = 0.65;
  const auto outcomes = ccfr::rerank_batch(fx.preds, db, index, cfg);
  CHECK(grid.cells[0] == ccfr::accuracy(outcomes, truth).top1_accuracy);
}

TEST_CASE("sweep covers the full cartesian grid deterministically") {
  const auto fx = small_fixture(41);
  const Database db = Database::build(fx.train);
  const auto index = ccfr::make_embedding_index(fx.queries);
  const TruthMap truth = ccfr::make_truth_map(fx.queries);
  const RerankConfig cfg;

  const auto topn = ccfr::parse_int_axis("2:6:1");
  const auto tsf = ccfr::parse_axis("0.4:0.95:0.05");
  const auto tsc = ccfr::parse_axis("0.5:0.95:0.05");
  CHECK(topn.size() == 5);
  CHECK(tsf.size() == 12);
  CHECK(tsc.size() == 10);

  const auto grid = ccfr::sweep(fx.preds, db, index, truth, cfg, topn, tsf, tsc);
  CHECK(grid.cells.size() == 600);
  for (double cell : grid.cells) {
    CHECK(cell >= 0.0);
    CHECK(cell <= 1.0);
  }

  const auto again = ccfr::sweep(fx.preds, db, index, truth, cfg, topn, tsf, tsc);
  CHECK(ccfr::sweep_to_csv(grid) == ccfr::sweep_to_csv(again));

  const auto threaded = ccfr::sweep(fx.preds, db, index, truth, cfg, topn, tsf, tsc, 4);
  CHECK(grid.cells == threaded.cells);
}

TEST_CASE("a zero t_sf column is constant in t_sc and equals classification") {
  const auto fx = small_fixture(43);
  const Database db = Database::build(fx.train);
  const auto index = ccfr::make_embedding_index(fx.queries);
  const TruthMap truth = ccfr::make_truth_map(fx.queries);
  const RerankConfig cfg;

  const auto grid =
      ccfr::sweep(fx.preds, db, index, truth, cfg, {2, 5}, {0.0}, {0.5, 0.7, 0.9});
  const auto cmp = ccfr::compare_modes(fx.preds, db, index, cfg, truth);
  for (std::size_t i = 0; i < grid.topn_values.size(); ++i) {
    for (std::size_t k = 0; k < grid.t_sc_values.size(); ++k) {
      CHECK(grid.at(i, 0, k) == cmp.classification_only.top1_accuracy);
    }
  }
}

TEST_CASE("sweep csv shape") {
  ccfr::SweepGrid grid;
  grid.topn_values = {2};
  grid.t_sf_values = {0.4, 0.45};
  grid.t_sc_values = {0.5};
  grid.cells = {0.25, 0.5};
  CHECK(ccfr::sweep_to_csv(grid) ==
        "topn,t_sf,t_sc,top1_acc\n2,0.4,0.5,0.250000\n2,0.45,0.5,0.500000\n");
}

TEST_CASE("axis parsing accepts lists and ranges") {
  CHECK(ccfr::parse_int_axis("2,3,4") == std::vector<int>{2, 3, 4});
  CHECK(ccfr::parse_axis("0.5") == std::vector<double>{0.5});

  const auto range = ccfr::parse_axis("0.4:0.95:0.05");
  REQUIRE(range.size() == 12);
  CHECK(range.front() == 0.4);
  CHECK(range.back() == doctest::Approx(0.95).epsilon(1e-12));

  CHECK(ccfr::parse_int_axis("2:6:1") == std::vector<int>{2, 3, 4, 5, 6});

  CHECK_THROWS_AS(ccfr::parse_axis(""), std::invalid_argument);
  CHECK_THROWS_AS(ccfr::parse_axis("1:2"), std::invalid_argument);
  CHECK_THROWS_AS(ccfr::parse_axis("1:2:0"), std::invalid_argument);
  CHECK_THROWS_AS(ccfr::parse_axis("abc"), std::invalid_argument);
  CHECK_THROWS_AS(ccfr::parse_int_axis("2.5"), std::invalid_argument);
}

TEST_CASE("sweep validates its axes") {
  const auto fx = small_fixture(47);
  const Database db = Database::build(fx.train);
  const auto index = ccfr::make_embedding_index(fx.queries);
  const TruthMap truth = ccfr::make_truth_map(fx.queries);
  CHECK_THROWS_AS(ccfr::sweep(fx.preds, db, index, truth, RerankConfig{}, {}, {0.5}, {0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ccfr::sweep(fx.preds, db, index, truth, RerankConfig{}, {0}, {0.5}, {0.5}),
                  std::invalid_argument);
}
