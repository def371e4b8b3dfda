#pragma once

#include <cstddef>
#include <vector>

namespace ccfr {

// Pooled features for one image: the global vector plus, per anchor scale,
// the local-region vectors kept by NMS (in NMS output order, zero-padded to
// the configured count via pad_missing_regions).
struct FeatureBundle {
  std::vector<double> global_feature;
  std::vector<std::vector<std::vector<double>>> local_features;  // [scale][k][dim]
};

// Linear map applied to the channel-concatenated local features of one
// scale: matrix has K*D rows and D columns, bias has D entries.
struct ScaleFusion {
  std::vector<std::vector<double>> matrix;
  std::vector<double> bias;
};

struct FusionWeights {
  std::vector<ScaleFusion> scales;
};

// Concatenate the K local vectors in order and apply the linear map:
// out[j] = bias[j] + sum_i concat[i] * matrix[i][j].
std::vector<double> fuse_scale(const std::vector<std::vector<double>>& locals,
                               const ScaleFusion& w);

// concat(global, fused scale 0, ..., fused scale S-1); L2-normalized when
// normalize is set. Output dimension is (1 + S) * D.
std::vector<double> assemble_embedding(const FeatureBundle& bundle,
                                       const FusionWeights& weights,
                                       bool normalize);

// Append zero vectors of the given dimension until exactly k entries.
std::vector<std::vector<double>> pad_missing_regions(std::vector<std::vector<double>> locals,
                                                     int k,
                                                     std::size_t dim);

}  // namespace ccfr
