#include "hierarchy.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "vec.hpp"

namespace ccfr {

void validate(const Hierarchy& h) {
  if (h.num_children <= 0) throw std::invalid_argument("num_children must be positive");
  if (h.num_super <= 0 || h.num_super > h.num_children) {
    throw std::invalid_argument("num_super must be in [1, num_children]");
  }
  if (h.parent.size() != static_cast<std::size_t>(h.num_children)) {
    throw std::invalid_argument("parent must have num_children entries");
  }
  std::vector<bool> used(h.num_super, false);
  for (int p : h.parent) {
    if (p < 0 || p >= h.num_super) throw std::invalid_argument("parent index out of range");
    used[p] = true;
  }
  for (bool u : used) {
    if (!u) throw std::invalid_argument("every super class must have at least one child");
  }
}

int super_label(const Hierarchy& h, int child) {
  if (child < 0 || child >= h.num_children) {
    throw std::invalid_argument("child class index out of range: " + std::to_string(child));
  }
  return h.parent[child];
}

std::vector<std::vector<double>> class_means(const std::vector<EmbeddingRecord>& records,
                                             int num_classes) {
  if (num_classes <= 0) throw std::invalid_argument("num_classes must be positive");
  if (records.empty()) throw std::invalid_argument("records must be non-empty");

  const std::size_t dim = records.front().embedding.size();
  std::vector<std::vector<double>> sums(num_classes, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(num_classes, 0);

  for (const auto& r : records) {
    if (r.label < 0 || r.label >= num_classes) {
      throw std::invalid_argument("record label out of range: " + r.id);
    }
    if (r.embedding.size() != dim) {
      throw std::invalid_argument("inconsistent embedding dimension: " + r.id);
    }
    for (std::size_t d = 0; d < dim; ++d) sums[r.label][d] += r.embedding[d];
    ++counts[r.label];
  }

  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("class " + std::to_string(c) + " has no records");
    }
    for (double& x : sums[c]) x /= static_cast<double>(counts[c]);
    l2_normalize(sums[c]);
  }
  return sums;
}

Hierarchy build_hierarchy(const std::vector<std::vector<double>>& means, int num_super) {
  const int num_children = static_cast<int>(means.size());
  if (num_children == 0) throw std::invalid_argument("means must be non-empty");
  if (num_super < 1 || num_super > num_children) {
    throw std::invalid_argument("num_super must be in [1, num_children]");
  }
  const std::size_t dim = means.front().size();
  for (const auto& m : means) {
    if (m.size() != dim) throw std::invalid_argument("inconsistent mean dimension");
  }

  // Base pairwise cosine distances between single classes.
  std::vector<std::vector<double>> base(num_children, std::vector<double>(num_children, 0.0));
  for (int i = 0; i < num_children; ++i) {
    const double ni = l2_norm(means[i]);
    if (ni < 1e-300) throw std::invalid_argument("zero-norm class mean");
    for (int j = i + 1; j < num_children; ++j) {
      const double njv = l2_norm(means[j]);
      const double d = 1.0 - dot(means[i], means[j]) / (ni * njv);
      base[i][j] = d;
      base[j][i] = d;
    }
  }

  // Each active cluster is identified by its smallest member index. pair_sum
  // holds the sum of base distances across the two member sets, so the
  // average linkage is pair_sum / (size_a * size_b) with exact bookkeeping
  // under merges (sums add).
  std::vector<bool> active(num_children, true);
  std::vector<std::size_t> size(num_children, 1);
  std::vector<int> assign(num_children);
  for (int i = 0; i < num_children; ++i) assign[i] = i;
  std::vector<std::vector<double>> pair_sum = base;

  int active_count = num_children;
  while (active_count > num_super) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1;
    int bj = -1;
    for (int i = 0; i < num_children; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < num_children; ++j) {
        if (!active[j]) continue;
        const double d = pair_sum[i][j] / static_cast<double>(size[i] * size[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
        // Equal distances fall through: the scan order already visits pairs
        // in lexicographic (i, j) order, so the first minimum wins.
      }
    }
    for (int k = 0; k < num_children; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double merged = pair_sum[bi][k] + pair_sum[bj][k];
      pair_sum[bi][k] = merged;
      pair_sum[k][bi] = merged;
    }
    size[bi] += size[bj];
    active[bj] = false;
    for (int c = 0; c < num_children; ++c) {
      if (assign[c] == bj) assign[c] = bi;
    }
    --active_count;
  }

  // Relabel clusters by ascending smallest member.
  std::vector<int> label_of(num_children, -1);
  int next = 0;
  for (int i = 0; i < num_children; ++i) {
    if (active[i]) label_of[i] = next++;
  }

  Hierarchy h;
  h.num_children = num_children;
  h.num_super = num_super;
  h.parent.resize(num_children);
  for (int c = 0; c < num_children; ++c) h.parent[c] = label_of[assign[c]];
  validate(h);
  return h;
}

}  // namespace ccfr
