// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <utility>

#include "plantdet/assign.hpp"
#include "plantdet/ops.hpp"

namespace plantdet {

/// Weights of the three loss terms plus per-level objectness balance.
struct LossWeights {
  double box = 0.05;
  double obj = 1.0;
  double cls = 0.00625;  // defaults(nc) sets 0.5 * nc / 80
  std::array<double, 3> balance{4.0, 1.0, 0.4};
  double pos_weight_obj = 1.0;
  double pos_weight_cls = 1.0;

  static LossWeights defaults(int nc) {
    LossWeights w;
    w.cls = 0.5 * nc / 80.0;
    return w;
  }
  void validate() const;
};

/// Objectness regression target: plain IoU of the decoded box against its
/// match, or the clamped CIoU variant.
enum class ObjTargetKind { kIou, kCiou };

struct LossComponents {
  double box = 0;   // weighted box term
  double obj = 0;   // weighted objectness term
  double cls = 0;   // weighted classification term
  double total = 0;
  double mean_ciou = 0;  // raw mean CIoU over positives (1.0 at the optimum)
  int64_t positives = 0;
};

/// Mean of pos_weight * t * softplus(-z) + (1 - t) * softplus(z).
/// Numerically stable for large |z|; targets must lie in [0, 1].
template <typename T>
TensorT<T> bce_with_logits(const TensorT<T>& logits, const TensorT<T>& targets,
                           T pos_weight);

/// YOLO-style box decode at one cell:
///   cx = (2 sigmoid(tx) - 0.5 + gx) * stride
///   w  = (2 sigmoid(tw))^2 * anchor_w
/// returned in corner form. Center offsets stay in (-0.5, 1.5) cells and
/// sizes in (0, 4 * anchor).
Box decode_box(double tx, double ty, double tw, double th, int gx, int gy,
               double anchor_w, double anchor_h, int stride);

/// Differentiable CIoU of paired corner boxes [N,4]; the aspect-ratio
/// impact factor alpha is treated as a constant during differentiation.
template <typename T>
TensorT<T> ciou_pairs(const TensorT<T>& pred_xyxy, const TensorT<T>& gt_xyxy);

/// As above, but the detached alpha is captured into (or reused from)
/// alpha_io. Differentiating the loss treats alpha as data, so a numeric
/// gradient check must difference the function with alpha pinned; this
/// overload makes that function explicit.
template <typename T>
TensorT<T> ciou_pairs(const TensorT<T>& pred_xyxy, const TensorT<T>& gt_xyxy,
                      std::vector<T>& alpha_io);

/// Detached per-level context of the composite loss (CIoU impact factors
/// and objectness regression targets). Captured on the first evaluation and
/// replayed on later ones.
template <typename T>
struct LossFreezeT {
  std::array<std::vector<T>, 3> alpha;
  std::array<std::vector<T>, 3> tobj;
};

/// Composite loss: box (1 - CIoU over positives), objectness BCE against the
/// IoU target everywhere, class BCE over positives with one-hot targets.
/// total = (box_w * box + obj_w * obj + cls_w * cls) * batch_size.
/// When freeze is given, detached quantities are captured/replayed through
/// it (see LossFreezeT).
template <typename T>
std::pair<TensorT<T>, LossComponents> detection_loss(
    const std::array<TensorT<T>, 3>& preds, const TargetAssignment& assignment,
    const LossWeights& weights, const AnchorSet& anchors,
    const std::array<LevelShape, 3>& levels, int nc,
    ObjTargetKind obj_target = ObjTargetKind::kIou,
    LossFreezeT<T>* freeze = nullptr);

}  // namespace plantdet
