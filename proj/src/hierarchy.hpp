#pragma once

#include <vector>

#include "types.hpp"

namespace ccfr {

// Two-level category system: each of the num_children fine-grained classes
// has exactly one parent in [0, num_super), and every parent is used.
struct Hierarchy {
  int num_children = 0;
  int num_super = 0;
  std::vector<int> parent;
};

// Throws std::invalid_argument on a malformed mapping.
void validate(const Hierarchy& h);

int super_label(const Hierarchy& h, int child);

// Per-class arithmetic mean embedding, L2-normalized. Every class in
// [0, num_classes) must have at least one record.
std::vector<std::vector<double>> class_means(const std::vector<EmbeddingRecord>& records,
                                             int num_classes);

// Agglomerative clustering of the class means with average linkage under
// cosine distance (1 - cosine similarity), merged until exactly num_super
// clusters remain. Ties in linkage distance are broken by the
// lexicographically smallest pair of smallest-member indices. Clusters are
// relabeled 0..num_super-1 in order of their smallest member, so the result
// is deterministic.
Hierarchy build_hierarchy(const std::vector<std::vector<double>>& means, int num_super);

}  // namespace ccfr
