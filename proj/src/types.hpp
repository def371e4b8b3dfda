#pragma once

#include <string>
#include <vector>

namespace ccfr {

// One image's identity, fine-grained class label, and embedding vector.
// Database rows and queries both use this shape.
struct EmbeddingRecord {
  std::string id;
  int label = 0;
  std::vector<double> embedding;
};

// Per-class probabilities from the coarse classifier head. Logit inputs are
// converted to probabilities at ingestion time.
struct PredictionRecord {
  std::string id;
  std::vector<double> probs;
};

}  // namespace ccfr
