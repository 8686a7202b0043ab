// SPDX-License-Identifier: Apache-2.0
#include "plantdet/blocks.hpp"

#include <cmath>

#include "op_common.hpp"

namespace plantdet {

void WindowSpec::validate() const {
  if (window < 1) throw ContractError("WindowSpec: window must be >= 1");
  if (shift < 0 || shift >= window) {
    throw ContractError("WindowSpec: shift must satisfy 0 <= shift < window");
  }
  if (h < 1 || w < 1) throw ContractError("WindowSpec: empty feature map");
}

// ---- builders -----------------------------------------------------------------

namespace {

template <typename T>
TensorT<T> kaiming_conv(Rng& rng, int cout, int cin, int k) {
  double sigma = std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
  auto t = TensorT<T>::zeros({cout, cin, k, k});
  for (auto& v : t.data()) v = static_cast<T>(rng.normal() * sigma);
  return t;
}

template <typename T>
TensorT<T> trunc_normal(Rng& rng, Shape shape, double sigma = 0.02) {
  auto t = TensorT<T>::zeros(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.truncated_normal(sigma));
  return t;
}

template <typename T>
LayerNormParamsT<T> make_layer_norm(ParamStoreT<T>& store, const std::string& prefix,
                                    int channels) {
  LayerNormParamsT<T> ln;
  ln.gamma = TensorT<T>::full({channels}, T(1));
  ln.beta = TensorT<T>::zeros({channels});
  store.add_param(prefix + ".gamma", ln.gamma);
  store.add_param(prefix + ".beta", ln.beta);
  return ln;
}

template <typename T>
BottleneckT<T> make_bottleneck(ParamStoreT<T>& store, Rng& rng,
                               const std::string& prefix, int channels,
                               bool shortcut) {
  BottleneckT<T> b;
  b.cv1 = make_cbs(store, rng, prefix + ".cv1", channels, channels, 1, 1);
  b.cv2 = make_cbs(store, rng, prefix + ".cv2", channels, channels, 3, 1);
  b.residual = shortcut;
  return b;
}

}  // namespace

template <typename T>
CbsT<T> make_cbs(ParamStoreT<T>& store, Rng& rng, const std::string& prefix,
                 int cin, int cout, int k, int stride) {
  CbsT<T> cbs;
  cbs.conv_w = kaiming_conv<T>(rng, cout, cin, k);
  cbs.bn_gamma = TensorT<T>::full({cout}, T(1));
  cbs.bn_beta = TensorT<T>::zeros({cout});
  cbs.bn_mean = TensorT<T>::zeros({cout});
  cbs.bn_var = TensorT<T>::full({cout}, T(1));
  cbs.stride = stride;
  cbs.padding = k / 2;
  store.add_param(prefix + ".conv.weight", cbs.conv_w);
  store.add_param(prefix + ".bn.gamma", cbs.bn_gamma);
  store.add_param(prefix + ".bn.beta", cbs.bn_beta);
  store.add_buffer(prefix + ".bn.running_mean", cbs.bn_mean);
  store.add_buffer(prefix + ".bn.running_var", cbs.bn_var);
  return cbs;
}

template <typename T>
C3T<T> make_c3(ParamStoreT<T>& store, Rng& rng, const std::string& prefix,
               int cin, int cout, int n, bool shortcut) {
  if (cout % 2 != 0) throw ConfigError("C3: output width must be even, got " + std::to_string(cout));
  const int mid = cout / 2;
  C3T<T> c3;
  c3.cv1 = make_cbs(store, rng, prefix + ".cv1", cin, mid, 1, 1);
  c3.cv2 = make_cbs(store, rng, prefix + ".cv2", cin, mid, 1, 1);
  for (int i = 0; i < n; ++i) {
    c3.bottlenecks.push_back(
        make_bottleneck(store, rng, prefix + ".m" + std::to_string(i), mid, shortcut));
  }
  c3.cv3 = make_cbs(store, rng, prefix + ".cv3", 2 * mid, cout, 1, 1);
  return c3;
}

template <typename T>
SppfT<T> make_sppf(ParamStoreT<T>& store, Rng& rng, const std::string& prefix,
                   int cin, int cout) {
  if (cin % 2 != 0) throw ConfigError("SPPF: input width must be even");
  const int mid = cin / 2;
  SppfT<T> s;
  s.cv1 = make_cbs(store, rng, prefix + ".cv1", cin, mid, 1, 1);
  s.cv2 = make_cbs(store, rng, prefix + ".cv2", 4 * mid, cout, 1, 1);
  return s;
}

namespace {

template <typename T>
MsaT<T> make_msa(ParamStoreT<T>& store, Rng& rng, const std::string& prefix,
                 int channels, int head_dim, int window, bool rel_bias) {
  if (channels % head_dim != 0) {
    throw ConfigError("attention: width " + std::to_string(channels) +
                      " not divisible by head dim " + std::to_string(head_dim));
  }
  MsaT<T> m;
  m.heads = channels / head_dim;
  m.qkv_w = trunc_normal<T>(rng, {channels, 3 * channels});
  m.qkv_b = TensorT<T>::zeros({3 * channels});
  m.proj_w = trunc_normal<T>(rng, {channels, channels});
  m.proj_b = TensorT<T>::zeros({channels});
  store.add_param(prefix + ".qkv.weight", m.qkv_w);
  store.add_param(prefix + ".qkv.bias", m.qkv_b);
  store.add_param(prefix + ".proj.weight", m.proj_w);
  store.add_param(prefix + ".proj.bias", m.proj_b);
  if (rel_bias) {
    const int span = 2 * window - 1;
    m.rel_bias = trunc_normal<T>(rng, {span * span, m.heads});
    store.add_param(prefix + ".rel_bias", m.rel_bias);
  }
  return m;
}

template <typename T>
MlpT<T> make_mlp(ParamStoreT<T>& store, Rng& rng, const std::string& prefix,
                 int channels, int ratio) {
  MlpT<T> mlp;
  const int hidden = channels * ratio;
  mlp.fc1_w = trunc_normal<T>(rng, {channels, hidden});
  mlp.fc1_b = TensorT<T>::zeros({hidden});
  mlp.fc2_w = trunc_normal<T>(rng, {hidden, channels});
  mlp.fc2_b = TensorT<T>::zeros({channels});
  store.add_param(prefix + ".fc1.weight", mlp.fc1_w);
  store.add_param(prefix + ".fc1.bias", mlp.fc1_b);
  store.add_param(prefix + ".fc2.weight", mlp.fc2_w);
  store.add_param(prefix + ".fc2.bias", mlp.fc2_b);
  return mlp;
}

template <typename T>
StSubblockT<T> make_st_subblock(ParamStoreT<T>& store, Rng& rng,
                                const std::string& prefix, int channels,
                                int window, int shift, int head_dim,
                                int mlp_ratio, bool global, bool rel_bias) {
  StSubblockT<T> sb;
  sb.ln1 = make_layer_norm(store, prefix + ".ln1", channels);
  sb.attn = make_msa(store, rng, prefix + ".attn", channels, head_dim, window,
                     rel_bias && !global);
  sb.ln2 = make_layer_norm(store, prefix + ".ln2", channels);
  sb.mlp = make_mlp(store, rng, prefix + ".mlp", channels, mlp_ratio);
  sb.window = window;
  sb.shift = shift;
  sb.global = global;
  return sb;
}

}  // namespace

template <typename T>
StBlockT<T> make_st_block(ParamStoreT<T>& store, Rng& rng, const std::string& prefix,
                          int channels, int window, int head_dim, int mlp_ratio,
                          bool global, bool rel_bias) {
  StBlockT<T> st;
  st.first = make_st_subblock(store, rng, prefix + ".a", channels, window, 0,
                              head_dim, mlp_ratio, global, rel_bias);
  st.second = make_st_subblock(store, rng, prefix + ".b", channels, window,
                               window / 2, head_dim, mlp_ratio, global, rel_bias);
  return st;
}

// ---- conv block forwards --------------------------------------------------------

template <typename T>
TensorT<T> cbs_forward(const TensorT<T>& x, CbsT<T>& block, bool training) {
  auto y = conv2d(x, block.conv_w, block.stride, block.padding);
  y = batch_norm2d(y, block.bn_gamma, block.bn_beta, block.bn_mean, block.bn_var,
                   block.bn_momentum, block.bn_eps, training);
  return silu(y);
}

template <typename T>
TensorT<T> c3_forward(const TensorT<T>& x, C3T<T>& block, bool training) {
  auto a = cbs_forward(x, block.cv1, training);
  for (auto& bn : block.bottlenecks) {
    auto t = cbs_forward(cbs_forward(a, bn.cv1, training), bn.cv2, training);
    a = bn.residual ? add(a, t) : t;
  }
  auto b = cbs_forward(x, block.cv2, training);
  return cbs_forward(concat<T>({a, b}, 1), block.cv3, training);
}

template <typename T>
TensorT<T> sppf_forward(const TensorT<T>& x, SppfT<T>& block, bool training) {
  auto a = cbs_forward(x, block.cv1, training);
  const int k = block.pool_k;
  auto p1 = maxpool2d(a, k, 1, k / 2);
  auto p2 = maxpool2d(p1, k, 1, k / 2);
  auto p3 = maxpool2d(p2, k, 1, k / 2);
  return cbs_forward(concat<T>({a, p1, p2, p3}, 1), block.cv2, training);
}

// ---- window algebra --------------------------------------------------------------

template <typename T>
TensorT<T> window_partition(const TensorT<T>& x, const WindowSpec& spec) {
  spec.validate();
  if (x.dim() != 4) throw DimensionError("window_partition: input must be [B,H,W,C]");
  const int64_t b = x.size(0), h = x.size(1), w = x.size(2), c = x.size(3);
  const int win = spec.window;
  if (h % win != 0 || w % win != 0) {
    throw DimensionError("window_partition: map " + std::to_string(h) + "x" +
                         std::to_string(w) + " not padded to window " +
                         std::to_string(win));
  }
  const int64_t ny = h / win, nx = w / win;
  const int64_t tokens = static_cast<int64_t>(win) * win;
  auto out = TensorT<T>::zeros({b * ny * nx, tokens, c});
  const T* px = x.data().data();
  T* py = out.data().data();
  for (int64_t bi = 0; bi < b; ++bi)
    for (int64_t wy = 0; wy < ny; ++wy)
      for (int64_t wx = 0; wx < nx; ++wx) {
        T* group = py + ((bi * ny + wy) * nx + wx) * tokens * c;
        for (int64_t ty = 0; ty < win; ++ty) {
          const T* src = px + ((bi * h + wy * win + ty) * w + wx * win) * c;
          std::copy(src, src + win * c, group + ty * win * c);
        }
      }
  detail::maybe_record_unary("window_partition", x, out,
                             [b, ny, nx, win, w, h, c, tokens](TensorT<T>& xs, TensorT<T>& os) {
    auto go = os.grad_view();
    auto d = xs.grad();
    for (int64_t bi = 0; bi < b; ++bi)
      for (int64_t wy = 0; wy < ny; ++wy)
        for (int64_t wx = 0; wx < nx; ++wx) {
          const T* group = go.data() + ((bi * ny + wy) * nx + wx) * tokens * c;
          for (int64_t ty = 0; ty < win; ++ty) {
            T* dst = d.data() + ((bi * h + wy * win + ty) * w + wx * win) * c;
            const T* src = group + ty * win * c;
            for (int64_t i = 0; i < win * c; ++i) dst[i] += src[i];
          }
        }
  });
  return out;
}

template <typename T>
TensorT<T> window_reverse(const TensorT<T>& windows, const WindowSpec& spec,
                          int64_t batch) {
  spec.validate();
  if (windows.dim() != 3) throw DimensionError("window_reverse: input must be [G,S,C]");
  const int win = spec.window;
  const int64_t h = spec.padded_h(), w = spec.padded_w();
  const int64_t ny = h / win, nx = w / win;
  const int64_t tokens = static_cast<int64_t>(win) * win;
  if (windows.size(1) != tokens) {
    throw DimensionError("window_reverse: token count mismatch");
  }
  if (windows.size(0) != batch * ny * nx) {
    throw DimensionError("window_reverse: window count " +
                         std::to_string(windows.size(0)) + " != batch*nW = " +
                         std::to_string(batch * ny * nx));
  }
  const int64_t c = windows.size(2);
  auto out = TensorT<T>::zeros({batch, h, w, c});
  const T* px = windows.data().data();
  T* py = out.data().data();
  for (int64_t bi = 0; bi < batch; ++bi)
    for (int64_t wy = 0; wy < ny; ++wy)
      for (int64_t wx = 0; wx < nx; ++wx) {
        const T* group = px + ((bi * ny + wy) * nx + wx) * tokens * c;
        for (int64_t ty = 0; ty < win; ++ty) {
          T* dst = py + ((bi * h + wy * win + ty) * w + wx * win) * c;
          std::copy(group + ty * win * c, group + (ty + 1) * win * c, dst);
        }
      }
  detail::maybe_record_unary("window_reverse", windows, out,
                             [batch, ny, nx, win, w, h, c, tokens](TensorT<T>& xs, TensorT<T>& os) {
    auto go = os.grad_view();
    auto d = xs.grad();
    for (int64_t bi = 0; bi < batch; ++bi)
      for (int64_t wy = 0; wy < ny; ++wy)
        for (int64_t wx = 0; wx < nx; ++wx) {
          T* group = d.data() + ((bi * ny + wy) * nx + wx) * tokens * c;
          for (int64_t ty = 0; ty < win; ++ty) {
            const T* src = go.data() + ((bi * h + wy * win + ty) * w + wx * win) * c;
            for (int64_t i = 0; i < win * c; ++i) group[ty * win * c + i] += src[i];
          }
        }
  });
  return out;
}

namespace {

// Region label of a padded-axis coordinate under the 3-slice scheme. An axis
// fully covered by one window is a single region.
inline int axis_region(int64_t v, int64_t padded, int window, int shift) {
  if (padded == window) return 0;
  if (v < padded - window) return 0;
  if (v < padded - shift) return 1;
  return 2;
}

}  // namespace

template <typename T>
TensorT<T> attention_mask(const WindowSpec& spec) {
  spec.validate();
  if (spec.shift == 0) {
    throw ContractError("attention_mask: no mask is defined for shift == 0");
  }
  const int win = spec.window;
  const int64_t hp = spec.padded_h(), wp = spec.padded_w();
  const int64_t ny = spec.windows_y(), nx = spec.windows_x();
  const int64_t tokens = spec.tokens();
  auto out = TensorT<T>::zeros({ny * nx, tokens, tokens});
  std::vector<int> labels(static_cast<size_t>(tokens));
  T* pm = out.data().data();
  for (int64_t wy = 0; wy < ny; ++wy)
    for (int64_t wx = 0; wx < nx; ++wx) {
      for (int ty = 0; ty < win; ++ty)
        for (int tx = 0; tx < win; ++tx) {
          int ry = axis_region(wy * win + ty, hp, win, spec.shift);
          int rx = axis_region(wx * win + tx, wp, win, spec.shift);
          labels[ty * win + tx] = ry * 3 + rx;
        }
      T* block = pm + (wy * nx + wx) * tokens * tokens;
      for (int64_t i = 0; i < tokens; ++i)
        for (int64_t j = 0; j < tokens; ++j)
          block[i * tokens + j] = labels[i] == labels[j] ? T(0) : T(-1e4);
    }
  return out;
}

namespace {

// Roll a channel-last map by (-sy, -sx) cyclically over dims (1, 2).
template <typename T>
TensorT<T> roll_neg(const TensorT<T>& x, int sy, int sx) {
  auto y = x;
  const int64_t h = x.size(1), w = x.size(2);
  if (sy > 0) {
    auto top = slice(y, {0, 0, 0, 0}, {y.size(0), sy, w, y.size(3)});
    auto rest = slice(y, {0, sy, 0, 0}, {y.size(0), h - sy, w, y.size(3)});
    y = concat<T>({rest, top}, 1);
  }
  if (sx > 0) {
    auto left = slice(y, {0, 0, 0, 0}, {y.size(0), y.size(1), sx, y.size(3)});
    auto rest = slice(y, {0, 0, sx, 0}, {y.size(0), y.size(1), w - sx, y.size(3)});
    y = concat<T>({rest, left}, 2);
  }
  return y;
}

// Zero-pad bottom/right to (hp, wp).
template <typename T>
TensorT<T> pad_bottom_right(const TensorT<T>& x, int64_t hp, int64_t wp) {
  auto y = x;
  if (hp > x.size(1)) {
    auto fill = TensorT<T>::zeros({x.size(0), hp - x.size(1), x.size(2), x.size(3)});
    y = concat<T>({y, fill}, 1);
  }
  if (wp > x.size(2)) {
    auto fill = TensorT<T>::zeros({y.size(0), y.size(1), wp - x.size(2), y.size(3)});
    y = concat<T>({y, fill}, 2);
  }
  return y;
}

// Attention over token groups [G, S, C]; mask (optional) is [nW, S, S] with
// group g using window g % nW.
template <typename T>
TensorT<T> attend_tokens(const TensorT<T>& tokens, const MsaT<T>& attn,
                         const TensorT<T>& mask, int window) {
  const int64_t g = tokens.size(0), s = tokens.size(1), c = tokens.size(2);
  const int64_t heads = attn.heads;
  const int64_t hd = c / heads;

  auto qkv = add_rowvec(matmul(tokens, attn.qkv_w), attn.qkv_b);  // [G,S,3C]
  auto q = slice(qkv, {0, 0, 0}, {g, s, c});
  auto k = slice(qkv, {0, 0, c}, {g, s, c});
  auto v = slice(qkv, {0, 0, 2 * c}, {g, s, c});
  // [G,S,C] -> [G,heads,S,hd]
  auto split = [&](const TensorT<T>& t) {
    return permute(reshape(t, {g, s, heads, hd}), {0, 2, 1, 3});
  };
  q = split(q);
  k = split(k);
  v = split(v);
  auto logits = mul(matmul(q, permute(k, {0, 1, 3, 2})),
                    static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd))));

  if (attn.rel_bias.defined()) {
    // Pairwise relative-offset index table for one window.
    const int span = 2 * window - 1;
    std::vector<int64_t> idx(static_cast<size_t>(s * s));
    for (int64_t i = 0; i < s; ++i) {
      int iy = static_cast<int>(i) / window, ix = static_cast<int>(i) % window;
      for (int64_t j = 0; j < s; ++j) {
        int jy = static_cast<int>(j) / window, jx = static_cast<int>(j) % window;
        idx[i * s + j] = (iy - jy + window - 1) * span + (ix - jx + window - 1);
      }
    }
    auto bias = take_rows(attn.rel_bias, idx);                  // [S*S, heads]
    bias = reshape(permute(reshape(bias, {s, s, heads}), {2, 0, 1}),
                   {heads * s * s});
    logits = add_rowvec(reshape(logits, {g, heads * s * s}), bias);
    logits = reshape(logits, {g, heads, s, s});
  }

  if (mask.defined()) {
    const int64_t nw = mask.size(0);
    auto full = TensorT<T>::zeros({g, heads, s, s});
    const T* pm = mask.data().data();
    T* pf = full.data().data();
    for (int64_t gi = 0; gi < g; ++gi) {
      const T* block = pm + (gi % nw) * s * s;
      for (int64_t hh = 0; hh < heads; ++hh) {
        std::copy(block, block + s * s, pf + (gi * heads + hh) * s * s);
      }
    }
    logits = add(logits, full);
  }

  auto weights = softmax_lastdim(logits);            // [G,heads,S,S]
  auto out = matmul(weights, v);                     // [G,heads,S,hd]
  out = reshape(permute(out, {0, 2, 1, 3}), {g, s, c});
  return add_rowvec(matmul(out, attn.proj_w), attn.proj_b);
}

}  // namespace

template <typename T>
TensorT<T> wmsa_forward(const TensorT<T>& x, const MsaT<T>& attn,
                        const WindowSpec& spec) {
  spec.validate();
  if (x.dim() != 4) throw DimensionError("wmsa_forward: input must be [B,H,W,C]");
  const int64_t b = x.size(0), h = x.size(1), w = x.size(2), c = x.size(3);
  if (h != spec.h || w != spec.w) {
    throw DimensionError("wmsa_forward: map does not match window spec");
  }
  if (c % attn.heads != 0) {
    throw DimensionError("wmsa_forward: channels not divisible by head count");
  }
  const int64_t hp = spec.padded_h(), wp = spec.padded_w();

  auto t = pad_bottom_right(x, hp, wp);
  if (spec.shift > 0) t = roll_neg(t, spec.shift, spec.shift);
  auto windows = window_partition(t, spec);

  TensorT<T> mask;  // undefined for the unshifted case
  if (spec.shift > 0) mask = attention_mask<T>(spec);
  auto attended = attend_tokens(windows, attn, mask, spec.window);

  auto y = window_reverse(attended, spec, b);
  if (spec.shift > 0) {
    y = roll_neg(y, static_cast<int>(hp) - spec.shift,
                 static_cast<int>(wp) - spec.shift);
  }
  if (hp != h || wp != w) y = slice(y, {0, 0, 0, 0}, {b, h, w, c});
  return y;
}

template <typename T>
TensorT<T> global_msa_forward(const TensorT<T>& x, const MsaT<T>& attn) {
  if (x.dim() != 4) throw DimensionError("global_msa_forward: input must be [B,H,W,C]");
  const int64_t b = x.size(0), h = x.size(1), w = x.size(2), c = x.size(3);
  if (c % attn.heads != 0) {
    throw DimensionError("global_msa_forward: channels not divisible by head count");
  }
  auto tokens = reshape(x, {b, h * w, c});
  auto out = attend_tokens(tokens, attn, TensorT<T>(), 0);
  return reshape(out, {b, h, w, c});
}

namespace {

template <typename T>
TensorT<T> mlp_forward(const TensorT<T>& x, const MlpT<T>& mlp) {
  auto y = add_rowvec(matmul(x, mlp.fc1_w), mlp.fc1_b);
  y = gelu(y);
  return add_rowvec(matmul(y, mlp.fc2_w), mlp.fc2_b);
}

template <typename T>
TensorT<T> st_subblock_forward(const TensorT<T>& x, StSubblockT<T>& sb) {
  // x is channel-last [B,H,W,C].
  WindowSpec spec{sb.window, sb.shift, static_cast<int>(x.size(1)),
                  static_cast<int>(x.size(2))};
  auto u = layer_norm(x, sb.ln1.gamma, sb.ln1.beta, sb.ln1.eps);
  auto a = sb.global ? global_msa_forward(u, sb.attn)
                     : wmsa_forward(u, sb.attn, spec);
  auto t = add(x, a);
  auto m = mlp_forward(layer_norm(t, sb.ln2.gamma, sb.ln2.beta, sb.ln2.eps), sb.mlp);
  return add(t, m);
}

}  // namespace

template <typename T>
TensorT<T> st_block_forward(const TensorT<T>& x, StBlockT<T>& block) {
  if (x.dim() != 4) throw DimensionError("st_block_forward: input must be [B,C,H,W]");
  auto t = permute(x, {0, 2, 3, 1});
  t = st_subblock_forward(t, block.first);
  t = st_subblock_forward(t, block.second);
  return permute(t, {0, 3, 1, 2});
}

#define PLANTDET_INSTANTIATE(T)                                                          \
  template CbsT<T> make_cbs(ParamStoreT<T>&, Rng&, const std::string&, int, int, int,    \
                            int);                                                        \
  template C3T<T> make_c3(ParamStoreT<T>&, Rng&, const std::string&, int, int, int,      \
                          bool);                                                         \
  template SppfT<T> make_sppf(ParamStoreT<T>&, Rng&, const std::string&, int, int);      \
  template StBlockT<T> make_st_block(ParamStoreT<T>&, Rng&, const std::string&, int,     \
                                     int, int, int, bool, bool);                         \
  template TensorT<T> cbs_forward(const TensorT<T>&, CbsT<T>&, bool);                    \
  template TensorT<T> c3_forward(const TensorT<T>&, C3T<T>&, bool);                      \
  template TensorT<T> sppf_forward(const TensorT<T>&, SppfT<T>&, bool);                  \
  template TensorT<T> window_partition(const TensorT<T>&, const WindowSpec&);            \
  template TensorT<T> window_reverse(const TensorT<T>&, const WindowSpec&, int64_t);     \
  template TensorT<T> attention_mask(const WindowSpec&);                                 \
  template TensorT<T> wmsa_forward(const TensorT<T>&, const MsaT<T>&,                    \
                                   const WindowSpec&);                                   \
  template TensorT<T> global_msa_forward(const TensorT<T>&, const MsaT<T>&);             \
  template TensorT<T> st_block_forward(const TensorT<T>&, StBlockT<T>&);

PLANTDET_INSTANTIATE(float)
PLANTDET_INSTANTIATE(double)
#undef PLANTDET_INSTANTIATE

}  // namespace plantdet
