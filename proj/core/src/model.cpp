// SPDX-License-Identifier: Apache-2.0
#include "plantdet/model.hpp"

#include <cmath>

namespace plantdet {

void BackboneConfig::validate() const {
  if (base_width < 2 || base_width % 2 != 0) {
    throw ConfigError("base_width must be an even integer >= 2");
  }
  if (depth < 1) throw ConfigError("depth must be >= 1");
  if (c3_stages < 0 || st_stages < 0 || c3_stages + st_stages != 4) {
    throw ConfigError("stage counts must satisfy c3_stages + st_stages == 4");
  }
  if (window < 1) throw ConfigError("window must be >= 1");
  if (head_dim < 1) throw ConfigError("head_dim must be >= 1");
  if (mlp_ratio < 1) throw ConfigError("mlp_ratio must be >= 1");
  for (int stage = c3_stages + 1; stage <= 4; ++stage) {
    if (stage_width(stage) % head_dim != 0) {
      throw ConfigError("stage " + std::to_string(stage) + " width " +
                        std::to_string(stage_width(stage)) +
                        " not divisible by head_dim " + std::to_string(head_dim));
    }
  }
}

template <typename T>
DetectorModelT<T> build_model(const BackboneConfig& cfg, int nc,
                              const AnchorSet& anchors,
                              std::vector<std::string> class_names,
                              uint64_t seed) {
  cfg.validate();
  anchors.validate();
  if (nc < 1) throw ConfigError("class count must be >= 1");
  if (!class_names.empty() && static_cast<int>(class_names.size()) != nc) {
    throw ConfigError("class name list length != nc");
  }

  DetectorModelT<T> m;
  m.cfg = cfg;
  m.nc = nc;
  m.anchors = anchors;
  m.class_names = std::move(class_names);
  m.seed = seed;
  Rng rng(seed);
  auto& store = m.store;

  const int w = cfg.base_width;
  m.stem = make_cbs(store, rng, "backbone.stem", 3, w, 3, 2);
  for (int stage = 1; stage <= 4; ++stage) {
    auto& s = m.stages[stage - 1];
    const int cin = cfg.stage_width(stage - 1);
    const int cout = cfg.stage_width(stage);
    const std::string prefix = "backbone.s" + std::to_string(stage);
    s.down = make_cbs(store, rng, prefix + ".down", cin, cout, 3, 2);
    s.is_st = stage > cfg.c3_stages;
    if (s.is_st) {
      s.st = make_st_block(store, rng, prefix + ".st", cout, cfg.window,
                           cfg.head_dim, cfg.mlp_ratio,
                           cfg.attention == AttentionKind::kGlobal,
                           cfg.rel_pos_bias);
    } else {
      s.c3 = make_c3(store, rng, prefix + ".c3", cout, cout, cfg.depth, true);
    }
  }
  const int w3 = cfg.stage_width(2);  // stride 8
  const int w4 = cfg.stage_width(3);  // stride 16
  const int w5 = cfg.stage_width(4);  // stride 32
  m.sppf = make_sppf(store, rng, "backbone.sppf", w5, w5);

  m.lat5 = make_cbs(store, rng, "neck.lat5", w5, w4, 1, 1);
  m.fuse4 = make_c3(store, rng, "neck.fuse4", 2 * w4, w4, cfg.depth, false);
  m.lat4 = make_cbs(store, rng, "neck.lat4", w4, w3, 1, 1);
  m.fuse3 = make_c3(store, rng, "neck.fuse3", 2 * w3, w3, cfg.depth, false);
  m.down3 = make_cbs(store, rng, "neck.down3", w3, w3, 3, 2);
  m.pan4 = make_c3(store, rng, "neck.pan4", 2 * w3, w4, cfg.depth, false);
  m.down4 = make_cbs(store, rng, "neck.down4", w4, w4, 3, 2);
  m.pan5 = make_c3(store, rng, "neck.pan5", 2 * w4, w5, cfg.depth, false);

  const int head_out = m.na * (5 + nc);
  const std::array<int, 3> head_in{w3, w4, w5};
  // Objectness bias ln(0.01/0.99) makes the initial mean sigmoid(obj) ~ 0.01;
  // class logits get the same rare-class prior.
  const T prior = static_cast<T>(std::log(0.01 / 0.99));
  for (int level = 0; level < 3; ++level) {
    auto& h = m.head[level];
    double sigma = 0.01;
    h.w = TensorT<T>::zeros({head_out, head_in[level], 1, 1});
    for (auto& v : h.w.data()) v = static_cast<T>(rng.normal() * sigma);
    h.b = TensorT<T>::zeros({head_out});
    auto bd = h.b.data();
    for (int a = 0; a < m.na; ++a) {
      bd[a * (5 + nc) + 4] = prior;
      for (int c = 0; c < nc; ++c) bd[a * (5 + nc) + 5 + c] = prior;
    }
    const std::string prefix = "head.p" + std::to_string(level + 3);
    store.add_param(prefix + ".weight", h.w);
    store.add_param(prefix + ".bias", h.b);
  }
  return m;
}

template <typename T>
FeaturePyramidT<T> backbone_forward(DetectorModelT<T>& model, const TensorT<T>& x) {
  if (x.dim() != 4 || x.size(1) != 3) {
    throw DimensionError("backbone_forward: input must be [B,3,H,W]");
  }
  if (x.size(2) % 32 != 0 || x.size(3) % 32 != 0) {
    throw DimensionError("backbone_forward: input dims must be divisible by 32, got " +
                         shape_str(x.shape()));
  }
  const bool train = model.training;
  auto t = cbs_forward(x, model.stem, train);
  FeaturePyramidT<T> fp;
  for (int stage = 1; stage <= 4; ++stage) {
    auto& s = model.stages[stage - 1];
    t = cbs_forward(t, s.down, train);
    t = s.is_st ? st_block_forward(t, s.st) : c3_forward(t, s.c3, train);
    if (stage == 2) fp.p3 = t;
    if (stage == 3) fp.p4 = t;
  }
  fp.p5 = sppf_forward(t, model.sppf, train);
  return fp;
}

template <typename T>
FeaturePyramidT<T> neck_forward(DetectorModelT<T>& model, const FeaturePyramidT<T>& fp) {
  const bool train = model.training;
  auto lat5 = cbs_forward(fp.p5, model.lat5, train);
  auto top4 = c3_forward(concat<T>({upsample_nearest2x(lat5), fp.p4}, 1),
                         model.fuse4, train);
  auto lat4 = cbs_forward(top4, model.lat4, train);
  auto out3 = c3_forward(concat<T>({upsample_nearest2x(lat4), fp.p3}, 1),
                         model.fuse3, train);
  auto out4 = c3_forward(concat<T>({cbs_forward(out3, model.down3, train), lat4}, 1),
                         model.pan4, train);
  auto out5 = c3_forward(concat<T>({cbs_forward(out4, model.down4, train), lat5}, 1),
                         model.pan5, train);
  return {out3, out4, out5};
}

template <typename T>
std::array<TensorT<T>, 3> head_forward(DetectorModelT<T>& model,
                                       const FeaturePyramidT<T>& fp) {
  std::array<TensorT<T>, 3> out;
  const std::array<const TensorT<T>*, 3> in{&fp.p3, &fp.p4, &fp.p5};
  for (int level = 0; level < 3; ++level) {
    auto& h = model.head[level];
    auto y = conv2d(*in[level], h.w, h.b, 1, 0);  // [B, na*(5+nc), H, W]
    const int64_t b = y.size(0), hh = y.size(2), ww = y.size(3);
    y = reshape(y, {b, model.na, 5 + model.nc, hh, ww});
    out[level] = permute(y, {0, 1, 3, 4, 2});  // [B, na, H, W, 5+nc]
  }
  return out;
}

template <typename T>
std::array<TensorT<T>, 3> model_forward(DetectorModelT<T>& model, const TensorT<T>& x) {
  auto taps = backbone_forward(model, x);
  auto fused = neck_forward(model, taps);
  return head_forward(model, fused);
}

template <typename T>
int64_t count_parameters(const DetectorModelT<T>& model) {
  return model.store.parameter_count();
}

#define PLANTDET_INSTANTIATE(T)                                                     \
  template DetectorModelT<T> build_model(const BackboneConfig&, int,                \
                                         const AnchorSet&,                          \
                                         std::vector<std::string>, uint64_t);       \
  template FeaturePyramidT<T> backbone_forward(DetectorModelT<T>&,                  \
                                               const TensorT<T>&);                  \
  template FeaturePyramidT<T> neck_forward(DetectorModelT<T>&,                      \
                                           const FeaturePyramidT<T>&);              \
  template std::array<TensorT<T>, 3> head_forward(DetectorModelT<T>&,               \
                                                  const FeaturePyramidT<T>&);       \
  template std::array<TensorT<T>, 3> model_forward(DetectorModelT<T>&,              \
                                                   const TensorT<T>&);              \
  template int64_t count_parameters(const DetectorModelT<T>&);

PLANTDET_INSTANTIATE(float)
PLANTDET_INSTANTIATE(double)
#undef PLANTDET_INSTANTIATE

}  // namespace plantdet
