// SPDX-License-Identifier: Apache-2.0
#include "plantdet/boxes.hpp"

#include <algorithm>
#include <cmath>

namespace plantdet {

AnchorSet AnchorSet::yolo_default() {
  return AnchorSet{{{{10, 13},
                     {16, 30},
                     {33, 23},
                     {30, 61},
                     {62, 45},
                     {59, 119},
                     {116, 90},
                     {156, 198},
                     {373, 326}}}};
}

void AnchorSet::validate() const {
  for (const auto& a : wh) {
    if (a[0] <= 0 || a[1] <= 0) throw ConfigError("anchors: non-positive dimension");
  }
  for (int level = 0; level + 1 < 3; ++level) {
    double max_area = 0, min_next = 1e30;
    for (int i = 0; i < 3; ++i) {
      max_area = std::max(max_area, wh[level * 3 + i][0] * wh[level * 3 + i][1]);
      min_next = std::min(min_next, wh[(level + 1) * 3 + i][0] * wh[(level + 1) * 3 + i][1]);
    }
    if (max_area > min_next) {
      throw ConfigError("anchors: levels must be grouped in ascending area order");
    }
  }
}

double iou_xyxy(const Box& a, const Box& b) {
  if (a.x2 < a.x1 || a.y2 < a.y1 || b.x2 < b.x1 || b.y2 < b.y1) {
    throw ContractError("iou_xyxy: inverted box");
  }
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double ciou(const Box& pred, const Box& gt) {
  if (pred.width() <= 0 || pred.height() <= 0 || gt.width() <= 0 || gt.height() <= 0) {
    throw ContractError("ciou: degenerate box");
  }
  const double iou = iou_xyxy(pred, gt);

  const double ex1 = std::min(pred.x1, gt.x1), ey1 = std::min(pred.y1, gt.y1);
  const double ex2 = std::max(pred.x2, gt.x2), ey2 = std::max(pred.y2, gt.y2);
  const double c2 = (ex2 - ex1) * (ex2 - ex1) + (ey2 - ey1) * (ey2 - ey1);

  const double pcx = (pred.x1 + pred.x2) / 2, pcy = (pred.y1 + pred.y2) / 2;
  const double gcx = (gt.x1 + gt.x2) / 2, gcy = (gt.y1 + gt.y2) / 2;
  const double rho2 = (pcx - gcx) * (pcx - gcx) + (pcy - gcy) * (pcy - gcy);

  constexpr double kPi = 3.14159265358979323846;
  const double da = std::atan(gt.width() / gt.height()) - std::atan(pred.width() / pred.height());
  const double v = 4.0 / (kPi * kPi) * da * da;
  const double alpha = v / ((1.0 - iou) + v + 1e-7);

  return iou - (c2 > 0 ? rho2 / c2 : 0.0) - alpha * v;
}

}  // namespace plantdet
