#include "features.hpp"

#include <stdexcept>
#include <string>

#include "vec.hpp"

namespace ccfr {

std::vector<double> fuse_scale(const std::vector<std::vector<double>>& locals,
                               const ScaleFusion& w) {
  const std::size_t out_dim = w.bias.size();
  if (out_dim == 0) throw std::invalid_argument("fusion bias must be non-empty");

  std::vector<double> concat;
  for (const auto& v : locals) {
    concat.insert(concat.end(), v.begin(), v.end());
  }
  if (w.matrix.size() != concat.size()) {
    throw std::invalid_argument("fusion matrix rows (" + std::to_string(w.matrix.size()) +
                                ") must match concatenated local dimension (" +
                                std::to_string(concat.size()) + ")");
  }
  for (const auto& row : w.matrix) {
    if (row.size() != out_dim) {
      throw std::invalid_argument("fusion matrix columns must match bias dimension");
    }
  }

  std::vector<double> out = w.bias;
  for (std::size_t i = 0; i < concat.size(); ++i) {
    const double x = concat[i];
    for (std::size_t j = 0; j < out_dim; ++j) out[j] += x * w.matrix[i][j];
  }
  return out;
}

std::vector<double> assemble_embedding(const FeatureBundle& bundle,
                                       const FusionWeights& weights,
                                       bool normalize) {
  if (bundle.local_features.size() != weights.scales.size()) {
    throw std::invalid_argument("bundle scale count must match fusion weights");
  }
  const std::size_t dim = bundle.global_feature.size();
  if (dim == 0) throw std::invalid_argument("global feature must be non-empty");

  std::vector<double> out = bundle.global_feature;
  for (std::size_t s = 0; s < weights.scales.size(); ++s) {
    const std::vector<double> fused = fuse_scale(bundle.local_features[s], weights.scales[s]);
    if (fused.size() != dim) {
      throw std::invalid_argument("fused output dimension must match the global feature");
    }
    out.insert(out.end(), fused.begin(), fused.end());
  }
  if (normalize) l2_normalize(out);
  return out;
}

std::vector<std::vector<double>> pad_missing_regions(std::vector<std::vector<double>> locals,
                                                     int k,
                                                     std::size_t dim) {
  if (k < 0 || locals.size() > static_cast<std::size_t>(k)) {
    throw std::invalid_argument("more local features than the configured keep count");
  }
  for (const auto& v : locals) {
    if (v.size() != dim) throw std::invalid_argument("local feature dimension mismatch");
  }
  while (locals.size() < static_cast<std::size_t>(k)) {
    locals.emplace_back(dim, 0.0);
  }
  return locals;
}

}  // namespace ccfr
