#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace ccfr {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double l2_norm(std::span<const double> v) {
  return std::sqrt(dot(v, v));
}

// In-place L2 normalization. Throws on (effectively) zero-norm input.
inline void l2_normalize(std::vector<double>& v) {
  const double n = l2_norm(v);
  if (n < 1e-300) throw std::invalid_argument("cannot normalize a zero-norm vector");
  for (double& x : v) x /= n;
}

inline std::vector<double> l2_normalized(std::vector<double> v) {
  l2_normalize(v);
  return v;
}

}  // namespace ccfr
