#include "losscheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "losses.hpp"
#include "rng.hpp"

namespace ccfr {

namespace {

constexpr double kKinkClearance = 1e-3;

// Logits are kept in a modest range so no softmax probability underflows
// into finite-difference noise.
std::vector<double> random_logits(Rng& rng, int n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-3.0, 3.0);
  return v;
}

std::vector<double> random_embedding(Rng& rng, int dim) {
  while (true) {
    std::vector<double> v = rng.gaussian_vector(dim);
    if (l2_norm(v) >= 0.5) return v;
  }
}

double check_cross_entropy(Rng& rng, double epsilon) {
  const int n = 3 + static_cast<int>(rng.uniform_index(8));
  const std::vector<double> logits = random_logits(rng, n);
  const int label = static_cast<int>(rng.uniform_index(n));
  const LossResult r = cross_entropy(logits, label);
  const LossFn fn = [label](const std::vector<std::vector<double>>& in) {
    return cross_entropy(in[0], label).value;
  };
  return check_gradient(fn, {logits}, r.gradients, epsilon);
}

double check_multi_level(Rng& rng, double epsilon) {
  while (true) {
    const int c = 4 + static_cast<int>(rng.uniform_index(9));
    const int cf = 2 + static_cast<int>(rng.uniform_index(c / 2 - 1 > 0 ? c / 2 - 1 : 1));
    Hierarchy h;
    h.num_children = c;
    h.num_super = cf;
    h.parent.resize(c);
    for (int i = 0; i < cf; ++i) h.parent[i] = i;  // keep every parent used
    for (int i = cf; i < c; ++i) h.parent[i] = static_cast<int>(rng.uniform_index(cf));

    const std::vector<double> children = random_logits(rng, c);
    const std::vector<double> super = random_logits(rng, cf);
    const int label = static_cast<int>(rng.uniform_index(c));

    // Distance of the hinge argument from its kink.
    const std::vector<double> p = softmax(children);
    const std::vector<double> q = softmax(super);
    const int sup = h.parent[label];
    double mass = 0.0;
    int group = 0;
    for (int i = 0; i < c; ++i) {
      if (h.parent[i] == sup) {
        mass += p[i];
        ++group;
      }
    }
    if (std::abs(mass / group - q[sup]) <= kKinkClearance) continue;

    const LossResult r = multi_level_loss(children, super, h, label, 1.0);
    const LossFn fn = [&h, label](const std::vector<std::vector<double>>& in) {
      return multi_level_loss(in[0], in[1], h, label, 1.0).value;
    };
    return check_gradient(fn, {children, super}, r.gradients, epsilon);
  }
}

double check_triplet(Rng& rng, double epsilon) {
  while (true) {
    const int dim = 3 + static_cast<int>(rng.uniform_index(6));
    TripletInputs t;
    t.anchor = random_embedding(rng, dim);
    t.positive = random_embedding(rng, dim);
    t.negative = random_embedding(rng, dim);
    t.margin = 0.2;
    const double raw = cosine_similarity(t.anchor, t.negative) -
                       cosine_similarity(t.anchor, t.positive) + t.margin;
    if (std::abs(raw) <= kKinkClearance) continue;

    const LossResult r = triplet_loss(t);
    const LossFn fn = [&t](const std::vector<std::vector<double>>& in) {
      TripletInputs probe = t;
      probe.anchor = in[0];
      probe.positive = in[1];
      probe.negative = in[2];
      return triplet_loss(probe).value;
    };
    return check_gradient(fn, {t.anchor, t.positive, t.negative}, r.gradients, epsilon);
  }
}

double check_total(Rng& rng, double epsilon) {
  while (true) {
    const int n = 3 + static_cast<int>(rng.uniform_index(8));
    const std::vector<double> logits = random_logits(rng, n);
    const int label = static_cast<int>(rng.uniform_index(n));
    const int dim = 3 + static_cast<int>(rng.uniform_index(6));
    TripletInputs t;
    t.anchor = random_embedding(rng, dim);
    t.positive = random_embedding(rng, dim);
    t.negative = random_embedding(rng, dim);
    t.margin = 0.2;
    const double raw = cosine_similarity(t.anchor, t.negative) -
                       cosine_similarity(t.anchor, t.positive) + t.margin;
    if (std::abs(raw) <= kKinkClearance) continue;

    const double mu = 1.0;
    const LossResult r = total_loss(logits, label, t, mu);
    const LossFn fn = [&t, label, mu](const std::vector<std::vector<double>>& in) {
      TripletInputs probe = t;
      probe.anchor = in[1];
      probe.positive = in[2];
      probe.negative = in[3];
      return total_loss(in[0], label, probe, mu).value;
    };
    return check_gradient(fn, {logits, t.anchor, t.positive, t.negative}, r.gradients,
                          epsilon);
  }
}

}  // namespace

std::vector<LossCheckEntry> run_loss_checks(std::uint64_t seed, int trials, double epsilon) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");

  Rng rng(seed);
  std::vector<LossCheckEntry> report = {
      {"cross_entropy", 0.0},
      {"multi_level_loss", 0.0},
      {"triplet_loss", 0.0},
      {"total_loss", 0.0},
  };
  for (int i = 0; i < trials; ++i) {
    report[0].max_rel_error = std::max(report[0].max_rel_error, check_cross_entropy(rng, epsilon));
    report[1].max_rel_error = std::max(report[1].max_rel_error, check_multi_level(rng, epsilon));
    report[2].max_rel_error = std::max(report[2].max_rel_error, check_triplet(rng, epsilon));
    report[3].max_rel_error = std::max(report[3].max_rel_error, check_total(rng, epsilon));
  }
  return report;
}

}  // namespace ccfr
