#include "fixture.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rng.hpp"
#include "vec.hpp"

namespace ccfr {

namespace {

// Cluster geometry: samples sit at cosine ~0.99 from their center, paired
// centers at ~0.89 from each other, unpaired centers near orthogonal in high
// dimensions. Same-class neighbors therefore outrank the paired class at
// every similarity threshold the sweep visits.
constexpr double kClusterSigma = 0.02;
constexpr double kPairPull = 0.5;
constexpr double kFlipProbability = 0.5;

std::vector<double> sample_point(Rng& rng, const std::vector<double>& center) {
  std::vector<double> v = center;
  for (double& x : v) x += kClusterSigma * rng.gaussian();
  l2_normalize(v);
  return v;
}

// Head model: confusable classes get a low-confidence top-1 (flipped to the
// paired class half the time) with the true class in second place;
// everything else is confidently correct, with a small moderate-confidence
// band so higher gate settings have something to chew on.
std::vector<double> make_probs(Rng& rng, int num_classes, int true_class, int paired_class) {
  int top1;
  int top2;
  double p1;
  double p2;
  if (paired_class >= 0) {
    const bool flip = rng.uniform() < kFlipProbability;
    top1 = flip ? paired_class : true_class;
    top2 = flip ? true_class : paired_class;
    p1 = rng.uniform(0.32, 0.45);
    p2 = p1 - rng.uniform(0.02, 0.08);
  } else {
    top1 = true_class;
    top2 = static_cast<int>(rng.uniform_index(num_classes - 1));
    if (top2 >= true_class) ++top2;
    p1 = rng.uniform() < 0.05 ? rng.uniform(0.55, 0.70) : rng.uniform(0.75, 0.92);
    p2 = rng.uniform(0.3, 0.7) * (1.0 - p1);
  }

  std::vector<double> probs(num_classes, 0.0);
  std::vector<double> weights;
  weights.reserve(num_classes - 2);
  double weight_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    if (c == top1 || c == top2) continue;
    const double w = rng.uniform(0.5, 1.5);
    weights.push_back(w);
    weight_sum += w;
  }
  const double rest = 1.0 - p1 - p2;
  std::size_t w = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (c == top1 || c == top2) continue;
    probs[c] = rest * weights[w++] / weight_sum;
  }
  probs[top1] = p1;
  probs[top2] = p2;
  return probs;
}

}  // namespace

void validate(const FixtureSpec& spec) {
  if (spec.num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (spec.train_per_class < 1) throw std::invalid_argument("train_per_class must be >= 1");
  if (spec.test_per_class < 1) throw std::invalid_argument("test_per_class must be >= 1");
  if (spec.dim < 2) throw std::invalid_argument("dim must be >= 2");
  if (spec.confusable_fraction < 0.0 || spec.confusable_fraction > 1.0) {
    throw std::invalid_argument("confusable_fraction must be in [0, 1]");
  }
}

Fixture generate_fixture(const FixtureSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);

  std::vector<std::vector<double>> centers;
  centers.reserve(spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c) {
    centers.push_back(rng.unit_vector(spec.dim));
  }

  // Disjoint confusable pairs drawn from a shuffled class list; the second
  // member's center is pulled next to the first's.
  std::vector<int> order(spec.num_classes);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const int pair_count =
      std::min(spec.num_classes / 2,
               static_cast<int>(spec.num_classes * spec.confusable_fraction / 2.0 + 0.5));
  std::vector<int> paired_with(spec.num_classes, -1);
  for (int p = 0; p < pair_count; ++p) {
    const int a = order[2 * p];
    const int b = order[2 * p + 1];
    paired_with[a] = b;
    paired_with[b] = a;
    std::vector<double> v = centers[a];
    const std::vector<double> dir = rng.unit_vector(spec.dim);
    for (int d = 0; d < spec.dim; ++d) v[d] += kPairPull * dir[d];
    l2_normalize(v);
    centers[b] = v;
  }

  Fixture fx;
  fx.train.reserve(static_cast<std::size_t>(spec.num_classes) * spec.train_per_class);
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int k = 0; k < spec.train_per_class; ++k) {
      EmbeddingRecord r;
      r.id = "train_c" + std::to_string(c) + "_" + std::to_string(k);
      r.label = c;
      r.embedding = sample_point(rng, centers[c]);
      fx.train.push_back(std::move(r));
    }
  }

  fx.queries.reserve(static_cast<std::size_t>(spec.num_classes) * spec.test_per_class);
  fx.preds.reserve(fx.queries.capacity());
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int k = 0; k < spec.test_per_class; ++k) {
      EmbeddingRecord q;
      q.id = "test_c" + std::to_string(c) + "_" + std::to_string(k);
      q.label = c;
      q.embedding = sample_point(rng, centers[c]);
      fx.queries.push_back(std::move(q));

      PredictionRecord p;
      p.id = fx.queries.back().id;
      p.probs = make_probs(rng, spec.num_classes, c, paired_with[c]);
      fx.preds.push_back(std::move(p));
    }
  }
  return fx;
}

}  // namespace ccfr
