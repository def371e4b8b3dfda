#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ccfr {

void validate(const AnchorSpec& spec) {
  if (spec.image_size <= 0) {
    throw std::invalid_argument("image_size must be positive");
  }
  if (spec.scales.empty()) {
    throw std::invalid_argument("scales must be non-empty");
  }
  if (spec.strides.size() != spec.scales.size()) {
    throw std::invalid_argument("strides must have one entry per scale");
  }
  for (std::size_t s = 0; s < spec.scales.size(); ++s) {
    if (spec.scales[s] <= 0.0) {
      throw std::invalid_argument("scales must be positive");
    }
    if (s > 0 && spec.scales[s] <= spec.scales[s - 1]) {
      throw std::invalid_argument("scales must be strictly increasing");
    }
    if (spec.strides[s] <= 0.0) {
      throw std::invalid_argument("strides must be positive");
    }
    if (spec.strides[s] > static_cast<double>(spec.image_size)) {
      throw std::invalid_argument("strides must not exceed image_size (no grid centers)");
    }
  }
  if (spec.aspect_ratio <= 0.0) {
    throw std::invalid_argument("aspect_ratio must be positive");
  }
}

std::vector<Box> generate_anchors(const AnchorSpec& spec) {
  validate(spec);
  const double size = static_cast<double>(spec.image_size);
  const double ratio_root = std::sqrt(spec.aspect_ratio);

  std::vector<Box> anchors;
  for (std::size_t s = 0; s < spec.scales.size(); ++s) {
    const double stride = spec.strides[s];
    const double half_w = spec.scales[s] * ratio_root / 2.0;
    const double half_h = spec.scales[s] / ratio_root / 2.0;
    for (int row = 0; (row + 0.5) * stride < size; ++row) {
      const double cy = (row + 0.5) * stride;
      for (int col = 0; (col + 0.5) * stride < size; ++col) {
        const double cx = (col + 0.5) * stride;
        Box b;
        b.x1 = cx - half_w;
        b.y1 = cy - half_h;
        b.x2 = cx + half_w;
        b.y2 = cy + half_h;
        b.scale_index = static_cast<int>(s);
        b.score = 0.0;
        if (spec.clip) {
          b.x1 = std::max(0.0, b.x1);
          b.y1 = std::max(0.0, b.y1);
          b.x2 = std::min(size, b.x2);
          b.y2 = std::min(size, b.y2);
        }
        anchors.push_back(b);
      }
    }
  }
  return anchors;
}

double iou(const Box& a, const Box& b) {
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = std::max(0.0, ix2 - ix1);
  const double ih = std::max(0.0, iy2 - iy1);
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

std::vector<std::size_t> scale_separated_nms_indices(const std::vector<Box>& boxes,
                                                     double iou_threshold,
                                                     int keep_per_scale) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("iou_threshold must be in (0, 1]");
  }
  if (keep_per_scale < 1) {
    throw std::invalid_argument("keep_per_scale must be >= 1");
  }

  // Partition by scale_index; std::map keeps scale order ascending.
  std::map<int, std::vector<std::size_t>> by_scale;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    by_scale[boxes[i].scale_index].push_back(i);
  }

  std::vector<std::size_t> survivors;
  for (auto& [scale, idx] : by_scale) {
    // Score-descending, ties broken by lower input index.
    std::sort(idx.begin(), idx.end(), [&boxes](std::size_t a, std::size_t b) {
      if (boxes[a].score != boxes[b].score) return boxes[a].score > boxes[b].score;
      return a < b;
    });
    std::vector<std::size_t> kept;
    for (std::size_t i : idx) {
      if (kept.size() >= static_cast<std::size_t>(keep_per_scale)) break;
      bool suppressed = false;
      for (std::size_t k : kept) {
        if (iou(boxes[i], boxes[k]) > iou_threshold) {
          suppressed = true;
          break;
        }
      }
      if (!suppressed) kept.push_back(i);
    }
    survivors.insert(survivors.end(), kept.begin(), kept.end());
  }
  return survivors;
}

std::vector<Box> scale_separated_nms(const std::vector<Box>& boxes,
                                     double iou_threshold,
                                     int keep_per_scale) {
  std::vector<Box> out;
  for (std::size_t i : scale_separated_nms_indices(boxes, iou_threshold, keep_per_scale)) {
    out.push_back(boxes[i]);
  }
  return out;
}

}  // namespace ccfr
