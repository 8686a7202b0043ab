// SPDX-License-Identifier: Apache-2.0
#include "plantdet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "op_common.hpp"

namespace plantdet {

void LossWeights::validate() const {
  if (box < 0 || obj < 0 || cls < 0) throw ConfigError("loss weights must be non-negative");
  for (double b : balance) {
    if (b < 0) throw ConfigError("objectness balance factors must be non-negative");
  }
  if (pos_weight_obj <= 0 || pos_weight_cls <= 0) {
    throw ConfigError("positive-sample weights must be positive");
  }
}

namespace {

template <typename T>
T softplus(T z) {
  return std::max(z, T(0)) + std::log1p(std::exp(-std::abs(z)));
}

template <typename T>
T sigmoid_s(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  T e = std::exp(z);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
TensorT<T> bce_with_logits(const TensorT<T>& logits, const TensorT<T>& targets,
                           T pos_weight) {
  detail::require_same_shape(logits, targets, "bce_with_logits");
  for (T t : targets.data()) {
    if (t < T(0) || t > T(1)) {
      throw ContractError("bce_with_logits: target outside [0,1]");
    }
  }
  const int64_t n = logits.numel();
  auto pz = logits.data();
  auto pt = targets.data();
  T acc = T(0);
  for (int64_t i = 0; i < n; ++i) {
    acc += pos_weight * pt[i] * softplus(-pz[i]) + (T(1) - pt[i]) * softplus(pz[i]);
  }
  auto out = TensorT<T>::scalar(acc / static_cast<T>(n));
  detail::maybe_record_binary("bce_with_logits", logits, targets, out,
                              [n, pos_weight](TensorT<T>& z, TensorT<T>& t, TensorT<T>& o) {
    if (!z.requires_grad()) return;  // targets are data, not differentiated
    T g = o.grad_view()[0] / static_cast<T>(n);
    auto pz2 = z.data();
    auto pt2 = t.data();
    auto dz = z.grad();
    for (int64_t i = 0; i < n; ++i) {
      T s = sigmoid_s(pz2[i]);
      dz[i] += g * ((T(1) - pt2[i]) * s - pos_weight * pt2[i] * (T(1) - s));
    }
  });
  check_finite(out, "bce_with_logits");
  return out;
}

Box decode_box(double tx, double ty, double tw, double th, int gx, int gy,
               double anchor_w, double anchor_h, int stride) {
  const double sx = 1.0 / (1.0 + std::exp(-tx));
  const double sy = 1.0 / (1.0 + std::exp(-ty));
  const double sw = 1.0 / (1.0 + std::exp(-tw));
  const double sh = 1.0 / (1.0 + std::exp(-th));
  const double cx = (2.0 * sx - 0.5 + gx) * stride;
  const double cy = (2.0 * sy - 0.5 + gy) * stride;
  const double w = (2.0 * sw) * (2.0 * sw) * anchor_w;
  const double h = (2.0 * sh) * (2.0 * sh) * anchor_h;
  return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

template <typename T>
TensorT<T> ciou_pairs(const TensorT<T>& pred_xyxy, const TensorT<T>& gt_xyxy) {
  std::vector<T> alpha_scratch;
  return ciou_pairs(pred_xyxy, gt_xyxy, alpha_scratch);
}

template <typename T>
TensorT<T> ciou_pairs(const TensorT<T>& pred_xyxy, const TensorT<T>& gt_xyxy,
                      std::vector<T>& alpha_io) {
  if (pred_xyxy.dim() != 2 || pred_xyxy.size(1) != 4 ||
      pred_xyxy.shape() != gt_xyxy.shape()) {
    throw DimensionError("ciou_pairs: inputs must both be [N,4]");
  }
  const int64_t n = pred_xyxy.size(0);
  auto col = [n](const TensorT<T>& t, int64_t j) {
    return reshape(slice(t, {0, j}, {n, 1}), {n});
  };
  auto px1 = col(pred_xyxy, 0), py1 = col(pred_xyxy, 1);
  auto px2 = col(pred_xyxy, 2), py2 = col(pred_xyxy, 3);
  auto gx1 = col(gt_xyxy, 0), gy1 = col(gt_xyxy, 1);
  auto gx2 = col(gt_xyxy, 2), gy2 = col(gt_xyxy, 3);

  auto pw = sub(px2, px1), ph = sub(py2, py1);
  auto gw = sub(gx2, gx1), gh = sub(gy2, gy1);

  auto iw = clamp_min(sub(minimum(px2, gx2), maximum(px1, gx1)), T(0));
  auto ih = clamp_min(sub(minimum(py2, gy2), maximum(py1, gy1)), T(0));
  auto inter = mul(iw, ih);
  auto uni = add(sub(add(mul(pw, ph), mul(gw, gh)), inter), T(1e-7));
  auto iou = div(inter, uni);

  auto cw = sub(maximum(px2, gx2), minimum(px1, gx1));
  auto ch = sub(maximum(py2, gy2), minimum(py1, gy1));
  auto c2 = add(add(square(cw), square(ch)), T(1e-7));
  auto pcx = mul(add(px1, px2), T(0.5)), pcy = mul(add(py1, py2), T(0.5));
  auto gcx = mul(add(gx1, gx2), T(0.5)), gcy = mul(add(gy1, gy2), T(0.5));
  auto rho2 = add(square(sub(pcx, gcx)), square(sub(pcy, gcy)));

  constexpr double kPi = 3.14159265358979323846;
  auto v = mul(square(sub(atan(div(gw, gh)), atan(div(pw, ph)))),
               static_cast<T>(4.0 / (kPi * kPi)));

  // alpha excluded from the gradient: computed from forward values only,
  // or replayed from a previous capture.
  if (alpha_io.empty()) {
    alpha_io.resize(static_cast<size_t>(n));
    auto pi = iou.data();
    auto pv = v.data();
    for (int64_t i = 0; i < n; ++i) {
      alpha_io[i] = pv[i] / ((T(1) - pi[i]) + pv[i] + T(1e-7));
    }
  } else if (alpha_io.size() != static_cast<size_t>(n)) {
    throw ContractError("ciou_pairs: frozen alpha length mismatch");
  }
  auto alpha = TensorT<T>::from_data({n}, alpha_io);
  return sub(sub(iou, div(rho2, c2)), mul(alpha, v));
}

namespace {

/// Row index of (image, anchor, gy, gx) in a level tensor reshaped to
/// [B*na*H*W, 5+nc].
inline int64_t entry_row(const AssignEntry& e, int na, int h, int w) {
  return ((static_cast<int64_t>(e.image) * na + e.anchor) * h + e.gy) * w + e.gx;
}

}  // namespace

template <typename T>
std::pair<TensorT<T>, LossComponents> detection_loss(
    const std::array<TensorT<T>, 3>& preds, const TargetAssignment& assignment,
    const LossWeights& weights, const AnchorSet& anchors,
    const std::array<LevelShape, 3>& levels, int nc, ObjTargetKind obj_target,
    LossFreezeT<T>* freeze) {
  weights.validate();
  auto box_sum = TensorT<T>::scalar(T(0));
  auto obj_sum = TensorT<T>::scalar(T(0));
  auto cls_sum = TensorT<T>::scalar(T(0));
  double ciou_total = 0;
  int64_t n_pos = 0;
  const int64_t batch = preds[0].size(0);

  for (int level = 0; level < 3; ++level) {
    const auto& p = preds[level];
    if (p.dim() != 5 || p.size(4) != 5 + nc) {
      throw DimensionError("detection_loss: predictions must be [B,na,H,W,5+nc]");
    }
    const int64_t na = p.size(1), h = p.size(2), w = p.size(3);
    if (levels[level].h != h || levels[level].w != w) {
      throw DimensionError("detection_loss: level shape mismatch with assignment");
    }
    const int64_t rows_n = batch * na * h * w;
    auto rows = reshape(p, {rows_n, 5 + nc});
    const auto& entries = assignment.levels[level];

    // Objectness target vector; positives write their IoU (max on duplicates).
    std::vector<T> tobj(static_cast<size_t>(rows_n), T(0));

    if (!entries.empty()) {
      const int64_t n = static_cast<int64_t>(entries.size());
      std::vector<int64_t> idx(entries.size());
      std::vector<T> grid_xy(entries.size() * 2);
      std::vector<T> anchor_wh(entries.size() * 2);
      std::vector<T> gt_xyxy(entries.size() * 4);
      std::vector<T> onehot(entries.size() * nc, T(0));
      const int stride = levels[level].stride;
      for (int64_t i = 0; i < n; ++i) {
        const auto& e = entries[i];
        idx[i] = entry_row(e, static_cast<int>(na), static_cast<int>(h),
                           static_cast<int>(w));
        grid_xy[i * 2] = static_cast<T>(e.gx);
        grid_xy[i * 2 + 1] = static_cast<T>(e.gy);
        auto aw = anchors.at_level(level, e.anchor);
        anchor_wh[i * 2] = static_cast<T>(aw[0] / stride);
        anchor_wh[i * 2 + 1] = static_cast<T>(aw[1] / stride);
        Box g = e.gt_cells.to_xyxy();
        gt_xyxy[i * 4] = static_cast<T>(g.x1);
        gt_xyxy[i * 4 + 1] = static_cast<T>(g.y1);
        gt_xyxy[i * 4 + 2] = static_cast<T>(g.x2);
        gt_xyxy[i * 4 + 3] = static_cast<T>(g.y2);
        onehot[i * nc + e.class_id] = T(1);
      }

      auto pos = take_rows(rows, idx);  // [N, 5+nc]
      auto txy = slice(pos, {0, 0}, {n, 2});
      auto twh = slice(pos, {0, 2}, {n, 2});
      auto grid = TensorT<T>::from_data({n, 2}, std::move(grid_xy));
      auto anc = TensorT<T>::from_data({n, 2}, std::move(anchor_wh));
      // Decode in grid-cell units.
      auto pxy = add(add(mul(sigmoid(txy), T(2)), T(-0.5)), grid);
      auto pwh = mul(square(mul(sigmoid(twh), T(2))), anc);
      auto half = mul(pwh, T(0.5));
      auto pred_xyxy = concat<T>({sub(pxy, half), add(pxy, half)}, 1);
      auto gt = TensorT<T>::from_data({n, 4}, std::move(gt_xyxy));

      std::vector<T> alpha_scratch;
      std::vector<T>& alpha =
          freeze ? freeze->alpha[level] : alpha_scratch;
      auto ciou_v = ciou_pairs(pred_xyxy, gt, alpha);  // [N]
      box_sum = add(box_sum, mean(sub_from(T(1), ciou_v)));

      // Objectness regression target from the decoded boxes (no gradient);
      // replayed from the freeze when one is supplied and already filled.
      auto cd = ciou_v.data();
      if (freeze && !freeze->tobj[level].empty()) {
        if (freeze->tobj[level].size() != tobj.size()) {
          throw ContractError("detection_loss: frozen tobj length mismatch");
        }
        tobj = freeze->tobj[level];
      } else {
        auto pd = pred_xyxy.data();
        for (int64_t i = 0; i < n; ++i) {
          double tv;
          if (obj_target == ObjTargetKind::kCiou) {
            tv = std::clamp(static_cast<double>(cd[i]), 0.0, 1.0);
          } else {
            Box pb{static_cast<double>(pd[i * 4]), static_cast<double>(pd[i * 4 + 1]),
                   static_cast<double>(pd[i * 4 + 2]),
                   static_cast<double>(pd[i * 4 + 3])};
            Box gb = entries[i].gt_cells.to_xyxy();
            tv = (pb.x2 > pb.x1 && pb.y2 > pb.y1) ? iou_xyxy(pb, gb) : 0.0;
          }
          auto& slot = tobj[static_cast<size_t>(idx[i])];
          slot = std::max(slot, static_cast<T>(tv));
        }
        if (freeze) freeze->tobj[level] = tobj;
      }
      for (int64_t i = 0; i < n; ++i) ciou_total += static_cast<double>(cd[i]);
      n_pos += n;

      auto cls_logits = slice(pos, {0, 5}, {n, nc});
      auto cls_t = TensorT<T>::from_data({n, nc}, std::move(onehot));
      cls_sum = add(cls_sum, bce_with_logits(cls_logits, cls_t,
                                             static_cast<T>(weights.pos_weight_cls)));
    }

    auto obj_logits = reshape(slice(rows, {0, 4}, {rows_n, 1}), {rows_n});
    auto obj_t = TensorT<T>::from_data({rows_n}, std::move(tobj));
    auto obj_bce = bce_with_logits(obj_logits, obj_t,
                                   static_cast<T>(weights.pos_weight_obj));
    obj_sum = add(obj_sum, mul(obj_bce, static_cast<T>(weights.balance[level])));
  }

  auto weighted = add(add(mul(box_sum, static_cast<T>(weights.box)),
                          mul(obj_sum, static_cast<T>(weights.obj))),
                      mul(cls_sum, static_cast<T>(weights.cls)));
  auto total = mul(weighted, static_cast<T>(batch));

  LossComponents comps;
  comps.box = weights.box * static_cast<double>(box_sum.item());
  comps.obj = weights.obj * static_cast<double>(obj_sum.item());
  comps.cls = weights.cls * static_cast<double>(cls_sum.item());
  comps.total = static_cast<double>(total.item());
  comps.mean_ciou = n_pos > 0 ? ciou_total / static_cast<double>(n_pos) : 0.0;
  comps.positives = n_pos;
  return {total, comps};
}

#define PLANTDET_INSTANTIATE(T)                                                       \
  template TensorT<T> bce_with_logits(const TensorT<T>&, const TensorT<T>&, T);       \
  template TensorT<T> ciou_pairs(const TensorT<T>&, const TensorT<T>&);               \
  template TensorT<T> ciou_pairs(const TensorT<T>&, const TensorT<T>&,                \
                                 std::vector<T>&);                                    \
  template std::pair<TensorT<T>, LossComponents> detection_loss(                      \
      const std::array<TensorT<T>, 3>&, const TargetAssignment&,                      \
      const LossWeights&, const AnchorSet&, const std::array<LevelShape, 3>&, int,    \
      ObjTargetKind, LossFreezeT<T>*);

PLANTDET_INSTANTIATE(float)
PLANTDET_INSTANTIATE(double)
#undef PLANTDET_INSTANTIATE

}  // namespace plantdet
