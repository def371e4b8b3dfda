#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "eval.hpp"
#include "features.hpp"
#include "geometry.hpp"
#include "hierarchy.hpp"
#include "rerank.hpp"
#include "types.hpp"

namespace ccfr::io {

// Malformed file contents (as opposed to filesystem failures). Messages for
// line-oriented formats carry "<path>: line <n>".
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes content to a sibling temp file and renames it into place, so a
// failed run never leaves a partial output.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// JSONL, one record per line: {"id": str, "label": int, "embedding": [...]}.
std::vector<EmbeddingRecord> read_embeddings_jsonl(const std::string& path);
void write_embeddings_jsonl(const std::string& path,
                            const std::vector<EmbeddingRecord>& records);

// JSONL with exactly one of "logits" or "probs" per line; logits are
// converted to probabilities at ingestion.
std::vector<PredictionRecord> read_predictions_jsonl(const std::string& path);
void write_predictions_jsonl(const std::string& path,
                             const std::vector<PredictionRecord>& preds);

struct BoxRecord {
  std::string id;
  Box box;
};

// JSONL: {"id": str, "scale": int, "box": [x1,y1,x2,y2], "score": float}.
std::vector<BoxRecord> read_boxes_jsonl(const std::string& path);
void write_boxes_jsonl(const std::string& path, const std::vector<BoxRecord>& records);

// JSON: {"num_children": C, "num_super": Cf, "parent": [ints]}.
Hierarchy read_hierarchy_json(const std::string& path);
void write_hierarchy_json(const std::string& path, const Hierarchy& h);
std::string hierarchy_to_json(const Hierarchy& h);

// JSON: {"scales": [{"matrix": [[...]], "bias": [...]}, ...]}.
FusionWeights read_fusion_weights_json(const std::string& path);
void write_fusion_weights_json(const std::string& path, const FusionWeights& w);

struct BundleRecord {
  std::string id;
  int label = 0;  // optional in the file, defaults to 0
  FeatureBundle bundle;
};

// JSONL: {"id": str, "label"?: int, "global_feature": [...],
//         "local_features": [[[...], ...], ...]} (outer lists are scales).
std::vector<BundleRecord> read_bundles_jsonl(const std::string& path);

// Flat config JSON; missing keys keep their defaults, unknown keys are
// rejected, the result is validated.
RerankConfig parse_rerank_config_json(const std::string& text);
std::string rerank_config_to_json(const RerankConfig& cfg);

// JSONL: {"id", "predicted_class", "gate", "scores": {"<class>": score}}.
void write_outcomes_jsonl(const std::string& path,
                          const std::vector<RerankOutcome>& outcomes);

std::string eval_report_to_json(const EvalReport& report);
std::string mode_comparison_to_json(const ModeComparison& cmp);

}  // namespace ccfr::io
