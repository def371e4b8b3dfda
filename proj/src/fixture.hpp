#pragma once

#include <cstdint>
#include <vector>

#include "types.hpp"

namespace ccfr {

// Gaussian class clusters on the unit sphere plus a noisy classifier head.
// A confusable_fraction of the classes is arranged in pairs whose centers
// sit close together; the head predicts those classes with low confidence
// and flips the pair half the time, while their embedding neighborhoods stay
// dominated by the true class. That gives the gated rerank path material to
// rectify.
struct FixtureSpec {
  int num_classes = 200;
  int train_per_class = 30;
  int test_per_class = 20;
  int dim = 64;
  double confusable_fraction = 0.2;
  std::uint64_t seed = 42;
};

void validate(const FixtureSpec& spec);

struct Fixture {
  std::vector<EmbeddingRecord> train;    // database side
  std::vector<EmbeddingRecord> queries;  // labels are the ground truth
  std::vector<PredictionRecord> preds;   // one per query, same order
};

Fixture generate_fixture(const FixtureSpec& spec);

}  // namespace ccfr
