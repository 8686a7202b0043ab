// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "plantdet/blocks.hpp"
#include "plantdet/boxes.hpp"
#include "plantdet/params.hpp"

namespace plantdet {

enum class AttentionKind { kWindow, kGlobal };

/// Backbone layout: four stages after the stem, C3 stages first, then
/// attention stages, widths doubling at every stride-2 step.
struct BackboneConfig {
  int base_width = 16;
  int depth = 1;  // bottlenecks per C3
  int c3_stages = 2;
  int st_stages = 2;
  AttentionKind attention = AttentionKind::kWindow;
  int window = 5;
  int head_dim = 32;
  int mlp_ratio = 4;
  bool rel_pos_bias = false;

  void validate() const;
  int stage_width(int stage) const {  // stage in 1..4
    return base_width << stage;
  }
};

template <typename T>
struct FeaturePyramidT {
  TensorT<T> p3, p4, p5;  // strides 8, 16, 32
};

using FeaturePyramid = FeaturePyramidT<float>;

/// The assembled one-stage detector: stem, four backbone stages, SPPF,
/// top-down/bottom-up fusion neck, and one 1x1 prediction conv per level.
template <typename T>
struct DetectorModelT {
  BackboneConfig cfg;
  int nc = 1;
  int na = 3;  // anchors per level
  AnchorSet anchors;
  std::vector<std::string> class_names;
  uint64_t seed = 0;
  bool training = false;

  struct Stage {
    CbsT<T> down;
    bool is_st = false;
    C3T<T> c3;
    StBlockT<T> st;
  };

  CbsT<T> stem;
  std::array<Stage, 4> stages;
  SppfT<T> sppf;

  CbsT<T> lat5, lat4;    // 1x1 lateral reductions
  C3T<T> fuse4, fuse3;   // top-down fusions
  CbsT<T> down3, down4;  // stride-2 re-descent
  C3T<T> pan4, pan5;     // bottom-up fusions

  struct HeadConv {
    TensorT<T> w;  // [na*(5+nc), Cin, 1, 1]
    TensorT<T> b;
  };
  std::array<HeadConv, 3> head;

  ParamStoreT<T> store;

  static constexpr std::array<int, 3> kStrides{8, 16, 32};
};

using DetectorModel = DetectorModelT<float>;

/// Builds the network with deterministic, seeded initialization: Kaiming
/// fan-in for convolutions, truncated normal (sigma 0.02) for attention and
/// MLP projections, objectness bias ln(0.01/0.99).
template <typename T>
DetectorModelT<T> build_model(const BackboneConfig& cfg, int nc,
                              const AnchorSet& anchors,
                              std::vector<std::string> class_names,
                              uint64_t seed);

/// Taps at strides 8 (after stage 2), 16 (after stage 3), 32 (after SPPF).
/// Input dims must be divisible by 32.
template <typename T>
FeaturePyramidT<T> backbone_forward(DetectorModelT<T>& model, const TensorT<T>& x);

/// FPN top-down then PAN bottom-up; output strides equal the input taps.
template <typename T>
FeaturePyramidT<T> neck_forward(DetectorModelT<T>& model, const FeaturePyramidT<T>& fp);

/// Raw predictions per level, shaped [B, na, H, W, 5+nc] (logits; no
/// activation applied).
template <typename T>
std::array<TensorT<T>, 3> head_forward(DetectorModelT<T>& model,
                                       const FeaturePyramidT<T>& fp);

/// backbone -> neck -> head.
template <typename T>
std::array<TensorT<T>, 3> model_forward(DetectorModelT<T>& model, const TensorT<T>& x);

template <typename T>
int64_t count_parameters(const DetectorModelT<T>& model);

}  // namespace plantdet
