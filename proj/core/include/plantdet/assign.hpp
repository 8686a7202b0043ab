// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "plantdet/boxes.hpp"

namespace plantdet {

struct LevelShape {
  int h = 0, w = 0;  // grid cells
  int stride = 0;    // input pixels per cell
};

/// One positive sample: an (image, anchor, cell) triple matched to a ground
/// truth box expressed in grid-cell units of its level.
struct AssignEntry {
  int image = 0;
  int anchor = 0;  // index within the level, 0..2
  int gy = 0, gx = 0;
  BoxCxywh gt_cells;
  int class_id = 0;
};

struct TargetAssignment {
  std::array<std::vector<AssignEntry>, 3> levels;

  int64_t total() const {
    return static_cast<int64_t>(levels[0].size() + levels[1].size() +
                                levels[2].size());
  }
};

/// Shape-ratio anchor matching: a ground truth matches anchor a at a level
/// iff max(w/wa, wa/w, h/ha, ha/h) < ratio_threshold. Each match marks the
/// containing cell plus the horizontally and vertically nearest neighbor
/// cells (offset threshold 0.5, border cells skipped). Matches may repeat
/// across levels. Entries are sorted canonically, so the result does not
/// depend on annotation order.
TargetAssignment assign_targets(
    const std::vector<std::vector<Annotation>>& annotations,
    const AnchorSet& anchors, const std::array<LevelShape, 3>& levels, int nc,
    double ratio_threshold = 4.0);

}  // namespace plantdet
