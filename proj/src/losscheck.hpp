#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ccfr {

struct LossCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

// Seeded random instances of every loss, analytic gradients checked against
// central finite differences. Instances are resampled until any hinge sits
// further than 1e-3 from its kink, where the subgradient choice would
// dominate the comparison. Entries: cross_entropy, multi_level_loss,
// triplet_loss, total_loss.
std::vector<LossCheckEntry> run_loss_checks(std::uint64_t seed, int trials, double epsilon);

}  // namespace ccfr
