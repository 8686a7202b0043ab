// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "plantdet/error.hpp"

namespace plantdet {

/// Corner-format box (x1, y1, x2, y2).
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
};

/// Center-format box (cx, cy, w, h); the annotation convention.
struct BoxCxywh {
  double cx = 0, cy = 0, w = 0, h = 0;

  Box to_xyxy() const { return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2}; }
};

/// Ground-truth box: class id plus normalized center-format coordinates.
struct Annotation {
  int class_id = 0;
  BoxCxywh box;  // all fields in [0, 1]
};

/// Model output after decoding: class id, score, absolute pixel corners.
struct Detection {
  int class_id = 0;
  double score = 0;
  Box box;
};

/// Nine anchors in input-image pixels, grouped three per pyramid level in
/// ascending area order.
struct AnchorSet {
  std::array<std::array<double, 2>, 9> wh;  // (w, h)

  static AnchorSet yolo_default();
  void validate() const;
  /// Anchor a (0..8) belongs to level a / 3.
  std::array<double, 2> at_level(int level, int i) const { return wh[level * 3 + i]; }
};

/// Intersection over union of corner boxes; 0 when the union is empty.
/// Inverted boxes (x2 < x1 or y2 < y1) are a contract error.
double iou_xyxy(const Box& a, const Box& b);

/// Complete IoU: IoU - rho^2/c^2 - alpha*v, with
///   v = (4/pi^2) (atan(w_b/h_b) - atan(w_a/h_a))^2
///   alpha = v / ((1 - IoU) + v + 1e-7).
/// Equals 1 exactly when the boxes coincide. Zero-size boxes are a
/// contract error.
double ciou(const Box& pred, const Box& gt);

}  // namespace plantdet
