#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hierarchy.hpp"
#include "types.hpp"

namespace ccfr {

// Loss value plus analytic gradients, one per differentiable input, in the
// order documented on each function.
struct LossResult {
  double value = 0.0;
  std::vector<std::vector<double>> gradients;
};

// Anchor/positive/negative embeddings plus the similarity margin.
struct TripletInputs {
  std::vector<double> anchor;
  std::vector<double> positive;
  std::vector<double> negative;
  double margin = 0.2;
};

// Numerically stable softmax (max-subtraction): entries positive, sum 1.
std::vector<double> softmax(const std::vector<double>& logits);

// value = -log softmax(logits)[label]; gradients[0] (w.r.t. logits) is
// softmax(logits) - onehot(label).
LossResult cross_entropy(const std::vector<double>& logits, int label);

// Children cross-entropy + lambda * super cross-entropy + hinge constraint:
// max(0, mean children probability of the label's super group - super
// probability of that group). gradients[0] is w.r.t. children_logits,
// gradients[1] w.r.t. super_logits; the hinge subgradient at the kink is 0.
LossResult multi_level_loss(const std::vector<double>& children_logits,
                            const std::vector<double>& super_logits,
                            const Hierarchy& h,
                            int label,
                            double lambda);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// max(0, sim(anchor, negative) - sim(anchor, positive) + margin).
// gradients[0..2] are w.r.t. anchor, positive, negative; all zero when the
// hinge is inactive (subgradient 0 at the kink).
LossResult triplet_loss(const TripletInputs& t);

// cross_entropy(logits, label) + mu * triplet_loss(t). gradients[0] is
// w.r.t. logits, gradients[1..3] w.r.t. anchor, positive, negative.
LossResult total_loss(const std::vector<double>& logits,
                      int label,
                      const TripletInputs& t,
                      double mu);

// For each record that has a same-class partner: one triplet with a
// uniformly random positive of the same class and the hardest negative (the
// cross-class record most cosine-similar to the anchor). Deterministic under
// the seed; fewer than two classes yields an empty result.
std::vector<TripletInputs> mine_triplets(const std::vector<EmbeddingRecord>& batch,
                                         double margin,
                                         std::uint64_t seed);

using LossFn = std::function<double(const std::vector<std::vector<double>>&)>;

// Central finite differences per coordinate; returns the max over
// coordinates of |analytic - numeric| / max(1e-12, |analytic| + |numeric|).
double check_gradient(const LossFn& fn,
                      const std::vector<std::vector<double>>& inputs,
                      const std::vector<std::vector<double>>& analytic_gradients,
                      double epsilon);

}  // namespace ccfr
