// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "plantdet/boxes.hpp"
#include "plantdet/tensor.hpp"

namespace plantdet {

/// Decodes raw head logits [B,na,H,W,5+nc] x 3 levels for a single image
/// (batch must be 1): score = sigmoid(obj) * max_c sigmoid(cls_c), class by
/// argmax (lowest id wins ties); detections below conf_threshold dropped.
/// Boxes come out in input-image pixels.
std::vector<Detection> decode_predictions(const std::array<Tensor, 3>& preds,
                                          const AnchorSet& anchors,
                                          const std::array<int, 3>& strides,
                                          double conf_threshold);

/// Per-class greedy non-maximum suppression: sort by score descending
/// (insertion index breaks ties), keep a box, drop same-class boxes with
/// IoU > iou_threshold. Output is score-descending.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold);

/// Top max_n by (score, insertion order); all when max_n <= 0.
std::vector<Detection> cap_detections(std::vector<Detection> dets, int max_n);

}  // namespace plantdet
