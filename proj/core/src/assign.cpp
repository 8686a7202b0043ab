// SPDX-License-Identifier: Apache-2.0
#include "plantdet/assign.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace plantdet {

TargetAssignment assign_targets(
    const std::vector<std::vector<Annotation>>& annotations,
    const AnchorSet& anchors, const std::array<LevelShape, 3>& levels, int nc,
    double ratio_threshold) {
  anchors.validate();
  TargetAssignment out;

  for (size_t img = 0; img < annotations.size(); ++img) {
    for (size_t k = 0; k < annotations[img].size(); ++k) {
      const Annotation& ann = annotations[img][k];
      const auto& b = ann.box;
      if (b.cx < 0 || b.cx > 1 || b.cy < 0 || b.cy > 1 || b.w <= 0 || b.w > 1 ||
          b.h <= 0 || b.h > 1) {
        throw DataError("assign_targets: annotation outside [0,1] (image " +
                        std::to_string(img) + ", line " + std::to_string(k + 1) + ")");
      }
      if (ann.class_id < 0 || ann.class_id >= nc) {
        throw DataError("assign_targets: class id out of range (image " +
                        std::to_string(img) + ", line " + std::to_string(k + 1) + ")");
      }

      for (int level = 0; level < 3; ++level) {
        const LevelShape& ls = levels[level];
        const double img_w = static_cast<double>(ls.w) * ls.stride;
        const double img_h = static_cast<double>(ls.h) * ls.stride;
        const double w_px = b.w * img_w;
        const double h_px = b.h * img_h;

        for (int a = 0; a < 3; ++a) {
          auto anchor = anchors.at_level(level, a);
          const double rw = std::max(w_px / anchor[0], anchor[0] / w_px);
          const double rh = std::max(h_px / anchor[1], anchor[1] / h_px);
          if (std::max(rw, rh) >= ratio_threshold) continue;

          const double cx = b.cx * ls.w;
          const double cy = b.cy * ls.h;
          const int fx = std::min(static_cast<int>(cx), ls.w - 1);
          const int fy = std::min(static_cast<int>(cy), ls.h - 1);
          const double frac_x = cx - std::floor(cx);
          const double frac_y = cy - std::floor(cy);

          std::vector<std::pair<int, int>> cells{{fx, fy}};
          if (frac_x < 0.5 && cx > 1.0) cells.push_back({fx - 1, fy});
          if (frac_x > 0.5 && cx < ls.w - 1.0) cells.push_back({fx + 1, fy});
          if (frac_y < 0.5 && cy > 1.0) cells.push_back({fx, fy - 1});
          if (frac_y > 0.5 && cy < ls.h - 1.0) cells.push_back({fx, fy + 1});

          BoxCxywh gt_cells{cx, cy, b.w * ls.w, b.h * ls.h};
          for (auto [gx, gy] : cells) {
            if (gx < 0 || gy < 0 || gx >= ls.w || gy >= ls.h) continue;
            out.levels[level].push_back(AssignEntry{
                static_cast<int>(img), a, gy, gx, gt_cells, ann.class_id});
          }
        }
      }
    }
  }

  // Canonical order: the loss must not depend on annotation order.
  for (auto& entries : out.levels) {
    std::sort(entries.begin(), entries.end(),
              [](const AssignEntry& a, const AssignEntry& b) {
                return std::tie(a.image, a.anchor, a.gy, a.gx, a.class_id,
                                a.gt_cells.cx, a.gt_cells.cy, a.gt_cells.w,
                                a.gt_cells.h) <
                       std::tie(b.image, b.anchor, b.gy, b.gx, b.class_id,
                                b.gt_cells.cx, b.gt_cells.cy, b.gt_cells.w,
                                b.gt_cells.h);
              });
  }
  return out;
}

}  // namespace plantdet
