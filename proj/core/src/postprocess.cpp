// SPDX-License-Identifier: Apache-2.0
#include "plantdet/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plantdet/loss.hpp"

namespace plantdet {

std::vector<Detection> decode_predictions(const std::array<Tensor, 3>& preds,
                                          const AnchorSet& anchors,
                                          const std::array<int, 3>& strides,
                                          double conf_threshold) {
  if (conf_threshold < 0 || conf_threshold > 1) {
    throw ContractError("decode_predictions: conf_threshold outside [0,1]");
  }
  std::vector<Detection> out;
  for (int level = 0; level < 3; ++level) {
    const auto& p = preds[level];
    if (p.dim() != 5) throw DimensionError("decode_predictions: want [B,na,H,W,5+nc]");
    if (p.size(0) != 1) throw ContractError("decode_predictions: one image at a time");
    const int64_t na = p.size(1), h = p.size(2), w = p.size(3), no = p.size(4);
    const int nc = static_cast<int>(no) - 5;
    auto pd = p.data();
    for (int64_t a = 0; a < na; ++a) {
      auto anchor = anchors.at_level(level, static_cast<int>(a));
      for (int64_t gy = 0; gy < h; ++gy)
        for (int64_t gx = 0; gx < w; ++gx) {
          const float* cell = pd.data() + (((a * h) + gy) * w + gx) * no;
          const double obj = 1.0 / (1.0 + std::exp(-static_cast<double>(cell[4])));
          double best_cls = -1e30;
          int best_id = 0;
          for (int c = 0; c < nc; ++c) {
            if (static_cast<double>(cell[5 + c]) > best_cls) {
              best_cls = cell[5 + c];
              best_id = c;
            }
          }
          const double cls_p = 1.0 / (1.0 + std::exp(-best_cls));
          const double score = obj * cls_p;
          if (score < conf_threshold) continue;
          Detection d;
          d.class_id = best_id;
          d.score = score;
          d.box = decode_box(cell[0], cell[1], cell[2], cell[3],
                             static_cast<int>(gx), static_cast<int>(gy),
                             anchor[0], anchor[1], strides[level]);
          out.push_back(d);
        }
    }
  }
  return out;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold) {
  if (iou_threshold < 0 || iou_threshold > 1) {
    throw ContractError("nms: iou_threshold outside [0,1]");
  }
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return dets[a].score > dets[b].score;
  });
  std::vector<bool> suppressed(dets.size(), false);
  std::vector<Detection> kept;
  for (size_t i = 0; i < order.size(); ++i) {
    if (suppressed[order[i]]) continue;
    const Detection& d = dets[order[i]];
    kept.push_back(d);
    for (size_t j = i + 1; j < order.size(); ++j) {
      if (suppressed[order[j]]) continue;
      const Detection& e = dets[order[j]];
      if (e.class_id != d.class_id) continue;
      if (iou_xyxy(d.box, e.box) > iou_threshold) suppressed[order[j]] = true;
    }
  }
  return kept;
}

std::vector<Detection> cap_detections(std::vector<Detection> dets, int max_n) {
  if (max_n <= 0 || static_cast<int>(dets.size()) <= max_n) return dets;
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  dets.resize(static_cast<size_t>(max_n));
  return dets;
}

}  // namespace plantdet
