#include "losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rng.hpp"
#include "vec.hpp"

namespace ccfr {

namespace {

double log_sum_exp(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double x : logits) acc += std::exp(x - m);
  return m + std::log(acc);
}

// d sim(u, v) / d u with s = sim(u, v) precomputed.
std::vector<double> cosine_grad_wrt_first(const std::vector<double>& u,
                                          const std::vector<double>& v,
                                          double s) {
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  std::vector<double> g(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    g[i] = v[i] / (nu * nv) - s * u[i] / (nu * nu);
  }
  return g;
}

}  // namespace

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax input must be non-empty");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

LossResult cross_entropy(const std::vector<double>& logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    throw std::invalid_argument("label out of range: " + std::to_string(label));
  }
  LossResult r;
  r.value = log_sum_exp(logits) - logits[label];
  r.gradients.push_back(softmax(logits));
  r.gradients[0][label] -= 1.0;
  return r;
}

LossResult multi_level_loss(const std::vector<double>& children_logits,
                            const std::vector<double>& super_logits,
                            const Hierarchy& h,
                            int label,
                            double lambda) {
  validate(h);
  if (static_cast<int>(children_logits.size()) != h.num_children) {
    throw std::invalid_argument("children_logits length must equal num_children");
  }
  if (static_cast<int>(super_logits.size()) != h.num_super) {
    throw std::invalid_argument("super_logits length must equal num_super");
  }
  if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
  const int sup = super_label(h, label);

  LossResult children_ce = cross_entropy(children_logits, label);
  LossResult super_ce = cross_entropy(super_logits, sup);

  const std::vector<double> p = softmax(children_logits);
  const std::vector<double> q = softmax(super_logits);

  double group_mass = 0.0;
  std::size_t group_size = 0;
  for (int c = 0; c < h.num_children; ++c) {
    if (h.parent[c] == sup) {
      group_mass += p[c];
      ++group_size;
    }
  }
  const double p_children = group_mass / static_cast<double>(group_size);
  const double p_parent = q[sup];
  const double hinge = std::max(0.0, p_children - p_parent);

  LossResult r;
  r.value = children_ce.value + lambda * super_ce.value + hinge;

  std::vector<double> grad_children = std::move(children_ce.gradients[0]);
  std::vector<double> grad_super = super_ce.gradients[0];
  for (double& g : grad_super) g *= lambda;

  if (hinge > 0.0) {
    // d p_children / d children_logit_k = (p_k / |G|) * ([k in G] - mass(G))
    for (int k = 0; k < h.num_children; ++k) {
      const double in_group = (h.parent[k] == sup) ? 1.0 : 0.0;
      grad_children[k] += p[k] / static_cast<double>(group_size) * (in_group - group_mass);
    }
    // d p_parent / d super_logit_m = q[sup] * ([m == sup] - q_m)
    for (int m = 0; m < h.num_super; ++m) {
      const double is_sup = (m == sup) ? 1.0 : 0.0;
      grad_super[m] -= p_parent * (is_sup - q[m]);
    }
  }

  r.gradients.push_back(std::move(grad_children));
  r.gradients.push_back(std::move(grad_super));
  return r;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na < 1e-300 || nb < 1e-300) {
    throw std::invalid_argument("cosine similarity of a zero-norm vector");
  }
  return dot(a, b) / (na * nb);
}

LossResult triplet_loss(const TripletInputs& t) {
  if (t.anchor.size() != t.positive.size() || t.anchor.size() != t.negative.size()) {
    throw std::invalid_argument("triplet embeddings must share one dimension");
  }
  if (t.margin < 0.0) throw std::invalid_argument("margin must be non-negative");
  const double sim_ap = cosine_similarity(t.anchor, t.positive);
  const double sim_an = cosine_similarity(t.anchor, t.negative);
  const double raw = sim_an - sim_ap + t.margin;

  LossResult r;
  r.value = std::max(0.0, raw);
  if (raw > 0.0) {
    std::vector<double> ga = cosine_grad_wrt_first(t.anchor, t.negative, sim_an);
    const std::vector<double> gap = cosine_grad_wrt_first(t.anchor, t.positive, sim_ap);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] -= gap[i];
    std::vector<double> gp = cosine_grad_wrt_first(t.positive, t.anchor, sim_ap);
    for (double& g : gp) g = -g;
    std::vector<double> gn = cosine_grad_wrt_first(t.negative, t.anchor, sim_an);
    r.gradients.push_back(std::move(ga));
    r.gradients.push_back(std::move(gp));
    r.gradients.push_back(std::move(gn));
  } else {
    r.gradients.assign(3, std::vector<double>(t.anchor.size(), 0.0));
  }
  return r;
}

LossResult total_loss(const std::vector<double>& logits,
                      int label,
                      const TripletInputs& t,
                      double mu) {
  LossResult ce = cross_entropy(logits, label);
  LossResult tl = triplet_loss(t);

  LossResult r;
  r.value = ce.value + mu * tl.value;
  r.gradients.push_back(std::move(ce.gradients[0]));
  for (auto& g : tl.gradients) {
    for (double& x : g) x *= mu;
    r.gradients.push_back(std::move(g));
  }
  return r;
}

std::vector<TripletInputs> mine_triplets(const std::vector<EmbeddingRecord>& batch,
                                         double margin,
                                         std::uint64_t seed) {
  // Fewer than two classes means no negatives exist.
  bool second_class = false;
  for (const auto& r : batch) {
    if (r.label != batch.front().label) {
      second_class = true;
      break;
    }
  }
  if (batch.empty() || !second_class) return {};

  Rng rng(seed);
  std::vector<TripletInputs> out;
  for (std::size_t a = 0; a < batch.size(); ++a) {
    std::vector<std::size_t> positives;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (i != a && batch[i].label == batch[a].label) positives.push_back(i);
    }
    if (positives.empty()) continue;
    const std::size_t pos = positives[rng.uniform_index(positives.size())];

    // Hardest negative: highest cosine similarity among other classes,
    // first-in-batch on ties.
    std::size_t neg = batch.size();
    double best = -2.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i].label == batch[a].label) continue;
      const double s = cosine_similarity(batch[a].embedding, batch[i].embedding);
      if (s > best) {
        best = s;
        neg = i;
      }
    }

    TripletInputs t;
    t.anchor = batch[a].embedding;
    t.positive = batch[pos].embedding;
    t.negative = batch[neg].embedding;
    t.margin = margin;
    out.push_back(std::move(t));
  }
  return out;
}

double check_gradient(const LossFn& fn,
                      const std::vector<std::vector<double>>& inputs,
                      const std::vector<std::vector<double>>& analytic_gradients,
                      double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  if (inputs.size() != analytic_gradients.size()) {
    throw std::invalid_argument("one analytic gradient per input is required");
  }
  double worst = 0.0;
  std::vector<std::vector<double>> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != analytic_gradients[i].size()) {
      throw std::invalid_argument("gradient shape must match its input");
    }
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double saved = probe[i][k];
      probe[i][k] = saved + epsilon;
      const double fp = fn(probe);
      probe[i][k] = saved - epsilon;
      const double fm = fn(probe);
      probe[i][k] = saved;
      const double numeric = (fp - fm) / (2.0 * epsilon);
      const double analytic = analytic_gradients[i][k];
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-12, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace ccfr
