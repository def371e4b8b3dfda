#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rerank.hpp"

namespace ccfr {

struct GateCounts {
  std::int64_t softmax_kept = 0;
  std::int64_t reranked = 0;
  std::int64_t fallback_softmax = 0;

  std::int64_t total() const { return softmax_kept + reranked + fallback_softmax; }
};

struct ConfusionCell {
  int true_class = 0;
  int predicted_class = 0;
  std::int64_t count = 0;
};

struct EvalReport {
  double top1_accuracy = 0.0;
  double topn_accuracy = 0.0;
  GateCounts gates;
  std::vector<ConfusionCell> confusion;  // sorted by (true, predicted)
};

using TruthMap = std::unordered_map<std::string, int>;

TruthMap make_truth_map(const std::vector<EmbeddingRecord>& queries);

// top1 = fraction with predicted_class == truth; topn = fraction whose true
// class appears among the outcome's candidate scores. Every outcome id must
// be present in truth.
EvalReport accuracy(const std::vector<RerankOutcome>& outcomes, const TruthMap& truth);

struct ModeComparison {
  EvalReport retrieval_only;
  EvalReport classification_only;
  EvalReport ccfr;
};

// One pass over the queries producing three reports: nearest-neighbor label,
// plain softmax argmax, and the gated rerank pipeline.
ModeComparison compare_modes(const std::vector<PredictionRecord>& preds,
                             const Database& db,
                             const EmbeddingIndex& queries,
                             const RerankConfig& cfg,
                             const TruthMap& truth,
                             int threads = 1);

struct SweepGrid {
  std::vector<int> topn_values;
  std::vector<double> t_sf_values;
  std::vector<double> t_sc_values;
  std::vector<double> cells;  // top1 accuracy, t_sc fastest, then t_sf, then topn

  double at(std::size_t i_topn, std::size_t i_tsf, std::size_t i_tsc) const {
    return cells[(i_topn * t_sf_values.size() + i_tsf) * t_sc_values.size() + i_tsc];
  }
};

// Full Cartesian evaluation of the gate/blend parameters. Neighbor pools and
// candidate orderings are computed once per query and shared across cells,
// so the grid is a pure function of its inputs.
SweepGrid sweep(const std::vector<PredictionRecord>& preds,
                const Database& db,
                const EmbeddingIndex& queries,
                const TruthMap& truth,
                const RerankConfig& base_cfg,
                const std::vector<int>& topn_values,
                const std::vector<double>& t_sf_values,
                const std::vector<double>& t_sc_values,
                int threads = 1);

// CSV with header "topn,t_sf,t_sc,top1_acc", rows in axis order.
std::string sweep_to_csv(const SweepGrid& grid);

// Axis syntax: a comma list ("2,3,4") or an inclusive "start:stop:step"
// range. Values are generated as start + k*step so repeated runs agree.
std::vector<double> parse_axis(const std::string& text);
std::vector<int> parse_int_axis(const std::string& text);

}  // namespace ccfr
