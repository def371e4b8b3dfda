#pragma once

#include <cstddef>
#include <vector>

namespace ccfr {

// Axis-aligned region in floating-point pixel coordinates, x2 > x1 and
// y2 > y1, tagged with the index of the anchor scale it came from and a
// confidence score.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  int scale_index = 0;
  double score = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
};

// Multi-scale anchor grid over a square image: one box of side scales[s] is
// centered at every stride-spaced grid point of scale s.
struct AnchorSpec {
  int image_size = 448;
  std::vector<double> scales = {96.0, 192.0};
  std::vector<double> strides = {32.0, 64.0};
  double aspect_ratio = 1.0;  // width / height
  bool clip = true;
};

// Throws std::invalid_argument naming the offending field.
void validate(const AnchorSpec& spec);

// One anchor per grid center ((i+0.5)*stride, (j+0.5)*stride) that lies
// inside the image, per scale. Output is ordered by (scale_index, row,
// column); scores are zero. Deterministic.
std::vector<Box> generate_anchors(const AnchorSpec& spec);

// Intersection over union; symmetric, in [0, 1] for positive-area boxes.
double iou(const Box& a, const Box& b);

// Greedy NMS run independently within each scale_index partition: boxes are
// visited in (score desc, input index asc) order and a box is suppressed
// when its IoU with an already kept box of the same scale exceeds
// iou_threshold (strict). At most keep_per_scale survivors per scale.
// Returns indices into `boxes`, ordered by (scale_index, score desc).
std::vector<std::size_t> scale_separated_nms_indices(const std::vector<Box>& boxes,
                                                     double iou_threshold,
                                                     int keep_per_scale);

std::vector<Box> scale_separated_nms(const std::vector<Box>& boxes,
                                     double iou_threshold,
                                     int keep_per_scale);

}  // namespace ccfr
