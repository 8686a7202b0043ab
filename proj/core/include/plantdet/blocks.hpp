// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "plantdet/ops.hpp"
#include "plantdet/params.hpp"

namespace plantdet {

// ---- convolutional building blocks ------------------------------------------

/// Conv + BatchNorm + SiLU. The conv runs bias-free; the shift lives in BN.
template <typename T>
struct CbsT {
  TensorT<T> conv_w;  // [Cout, Cin, k, k]
  TensorT<T> bn_gamma, bn_beta;
  TensorT<T> bn_mean, bn_var;  // running stats (buffers)
  int stride = 1;
  int padding = 0;
  double bn_momentum = 0.03;
  double bn_eps = 1e-3;

  int64_t out_channels() const { return conv_w.size(0); }
};

template <typename T>
struct BottleneckT {
  CbsT<T> cv1;  // 1x1
  CbsT<T> cv2;  // 3x3
  bool residual = true;
};

/// Two parallel 1x1 branches, n residual bottlenecks on one of them,
/// 1x1 fuse after concat.
template <typename T>
struct C3T {
  CbsT<T> cv1, cv2, cv3;
  std::vector<BottleneckT<T>> bottlenecks;
};

/// 1x1 in, three serial k=5 max-pools, concat of the four maps, 1x1 out.
template <typename T>
struct SppfT {
  CbsT<T> cv1, cv2;
  int pool_k = 5;
};

// ---- windowed attention ------------------------------------------------------

/// Window tiling of one feature map. Padding rounds the map up to whole
/// windows; shift is 0 (W-MSA) or window/2 (SW-MSA).
struct WindowSpec {
  int window = 5;
  int shift = 0;
  int h = 0, w = 0;  // unpadded feature map dims

  int padded_h() const { return (h + window - 1) / window * window; }
  int padded_w() const { return (w + window - 1) / window * window; }
  int windows_y() const { return padded_h() / window; }
  int windows_x() const { return padded_w() / window; }
  int num_windows() const { return windows_y() * windows_x(); }
  int tokens() const { return window * window; }

  void validate() const;
};

template <typename T>
struct LayerNormParamsT {
  TensorT<T> gamma, beta;
  double eps = 1e-5;
};

/// Multi-head attention parameters. Weights are stored input-major
/// ([in, out]) so the forward pass is a plain matmul.
template <typename T>
struct MsaT {
  TensorT<T> qkv_w;   // [C, 3C]
  TensorT<T> qkv_b;   // [3C]
  TensorT<T> proj_w;  // [C, C]
  TensorT<T> proj_b;  // [C]
  TensorT<T> rel_bias;  // optional [(2W-1)^2, heads] learned table
  int heads = 1;
};

template <typename T>
struct MlpT {
  TensorT<T> fc1_w, fc1_b;  // [C, rC], [rC]
  TensorT<T> fc2_w, fc2_b;  // [rC, C], [C]
};

/// One attention sub-block: LN -> attention -> +x -> LN -> MLP -> +x.
template <typename T>
struct StSubblockT {
  LayerNormParamsT<T> ln1, ln2;
  MsaT<T> attn;
  MlpT<T> mlp;
  int window = 5;
  int shift = 0;
  bool global = false;  // full-sequence attention instead of windows
};

/// Paired unit: a windowed sub-block followed by a shifted one, so
/// information moves both within and across windows.
template <typename T>
struct StBlockT {
  StSubblockT<T> first;   // shift 0
  StSubblockT<T> second;  // shift window/2
};

// ---- builders (seeded, registering into the store) ---------------------------

template <typename T>
CbsT<T> make_cbs(ParamStoreT<T>& store, Rng& rng, const std::string& prefix,
                 int cin, int cout, int k, int stride);
template <typename T>
C3T<T> make_c3(ParamStoreT<T>& store, Rng& rng, const std::string& prefix,
               int cin, int cout, int n, bool shortcut);
template <typename T>
SppfT<T> make_sppf(ParamStoreT<T>& store, Rng& rng, const std::string& prefix,
                   int cin, int cout);
template <typename T>
StBlockT<T> make_st_block(ParamStoreT<T>& store, Rng& rng, const std::string& prefix,
                          int channels, int window, int head_dim, int mlp_ratio,
                          bool global, bool rel_bias);

// ---- forward passes -----------------------------------------------------------

template <typename T>
TensorT<T> cbs_forward(const TensorT<T>& x, CbsT<T>& block, bool training);
template <typename T>
TensorT<T> c3_forward(const TensorT<T>& x, C3T<T>& block, bool training);
template <typename T>
TensorT<T> sppf_forward(const TensorT<T>& x, SppfT<T>& block, bool training);

/// [B,H,W,C] -> [B*nW, window^2, C]; input must already be padded to whole
/// windows. Windows are laid out row-major, batch-major.
template <typename T>
TensorT<T> window_partition(const TensorT<T>& x, const WindowSpec& spec);

/// Exact inverse of window_partition.
template <typename T>
TensorT<T> window_reverse(const TensorT<T>& windows, const WindowSpec& spec,
                          int64_t batch);

/// Additive attention mask for the shifted arrangement: [nW, S, S] with 0 for
/// pairs from the same contiguous image region and -1e4 otherwise, via the
/// 3-slice region labeling of the padded grid. An axis the window covers
/// entirely forms a single region (the roll is a no-op for its windows).
/// Calling with shift == 0 is a contract error.
template <typename T>
TensorT<T> attention_mask(const WindowSpec& spec);

/// Windowed (optionally shifted) multi-head self-attention on a channel-last
/// map: pad -> cyclic shift -> partition -> attend(+mask) -> reverse ->
/// unshift -> crop.
template <typename T>
TensorT<T> wmsa_forward(const TensorT<T>& x, const MsaT<T>& attn,
                        const WindowSpec& spec);

/// Full-sequence multi-head self-attention over all H*W positions.
template <typename T>
TensorT<T> global_msa_forward(const TensorT<T>& x, const MsaT<T>& attn);

/// Channel-first in/out; applies both paired sub-blocks.
template <typename T>
TensorT<T> st_block_forward(const TensorT<T>& x, StBlockT<T>& block);

}  // namespace plantdet
