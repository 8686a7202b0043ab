// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <limits>
#include <vector>

#include "op_common.hpp"
#include "plantdet/ops.hpp"

namespace plantdet {

namespace {

struct Conv2dDims {
  int64_t b, cin, h, w;
  int64_t cout, kh, kw;
  int64_t oh, ow;
  int stride, pad;
};

template <typename T>
Conv2dDims check_conv(const TensorT<T>& x, const TensorT<T>& w, int stride,
                      int padding, const char* op) {
  if (x.dim() != 4) throw DimensionError(std::string(op) + ": input must be [B,C,H,W], got " + shape_str(x.shape()));
  if (w.dim() != 4) throw DimensionError(std::string(op) + ": weight must be [Cout,Cin,kh,kw], got " + shape_str(w.shape()));
  if (stride < 1) throw ContractError(std::string(op) + ": stride must be >= 1");
  if (padding < 0) throw ContractError(std::string(op) + ": padding must be >= 0");
  Conv2dDims d;
  d.b = x.size(0);
  d.cin = x.size(1);
  d.h = x.size(2);
  d.w = x.size(3);
  d.cout = w.size(0);
  d.kh = w.size(2);
  d.kw = w.size(3);
  d.stride = stride;
  d.pad = padding;
  if (w.size(1) != d.cin) {
    throw DimensionError(std::string(op) + ": weight expects " +
                         std::to_string(w.size(1)) + " input channels, input has " +
                         std::to_string(d.cin));
  }
  if (d.kh > d.h + 2 * padding || d.kw > d.w + 2 * padding) {
    throw DimensionError(std::string(op) + ": kernel " + std::to_string(d.kh) + "x" +
                         std::to_string(d.kw) + " larger than padded input " +
                         std::to_string(d.h + 2 * padding) + "x" +
                         std::to_string(d.w + 2 * padding));
  }
  d.oh = (d.h + 2 * padding - d.kh) / stride + 1;
  d.ow = (d.w + 2 * padding - d.kw) / stride + 1;
  return d;
}

// cols[Cin*kh*kw, oh*ow] from one image [Cin,H,W].
template <typename T>
void im2col(const T* img, const Conv2dDims& d, T* cols) {
  const int64_t area = d.oh * d.ow;
  for (int64_t c = 0; c < d.cin; ++c) {
    for (int64_t ki = 0; ki < d.kh; ++ki) {
      for (int64_t kj = 0; kj < d.kw; ++kj) {
        T* row = cols + ((c * d.kh + ki) * d.kw + kj) * area;
        for (int64_t oy = 0; oy < d.oh; ++oy) {
          int64_t iy = oy * d.stride - d.pad + ki;
          for (int64_t ox = 0; ox < d.ow; ++ox) {
            int64_t ix = ox * d.stride - d.pad + kj;
            row[oy * d.ow + ox] =
                (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w)
                    ? img[(c * d.h + iy) * d.w + ix]
                    : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_acc(const T* cols, const Conv2dDims& d, T* img) {
  const int64_t area = d.oh * d.ow;
  for (int64_t c = 0; c < d.cin; ++c) {
    for (int64_t ki = 0; ki < d.kh; ++ki) {
      for (int64_t kj = 0; kj < d.kw; ++kj) {
        const T* row = cols + ((c * d.kh + ki) * d.kw + kj) * area;
        for (int64_t oy = 0; oy < d.oh; ++oy) {
          int64_t iy = oy * d.stride - d.pad + ki;
          if (iy < 0 || iy >= d.h) continue;
          for (int64_t ox = 0; ox < d.ow; ++ox) {
            int64_t ix = ox * d.stride - d.pad + kj;
            if (ix < 0 || ix >= d.w) continue;
            img[(c * d.h + iy) * d.w + ix] += row[oy * d.ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& bias,
                  int stride, int padding) {
  Conv2dDims d = check_conv(x, w, stride, padding, "conv2d");
  const bool has_bias = bias.defined();
  if (has_bias && (bias.dim() != 1 || bias.size(0) != d.cout)) {
    throw DimensionError("conv2d: bias must be [Cout]");
  }
  auto out = TensorT<T>::zeros({d.b, d.cout, d.oh, d.ow});

  const int64_t ck = d.cin * d.kh * d.kw;
  const int64_t area = d.oh * d.ow;
  // One shared col buffer per image, kept for the backward pass.
  auto cols = std::make_shared<std::vector<T>>(static_cast<size_t>(d.b * ck * area));
  const T* px = x.data().data();
  const T* pw = w.data().data();
  T* py = out.data().data();
  for (int64_t b = 0; b < d.b; ++b) {
    T* col = cols->data() + b * ck * area;
    im2col(px + b * d.cin * d.h * d.w, d, col);
    detail::gemm_acc(pw, col, py + b * d.cout * area, d.cout, ck, area);
  }
  if (has_bias) {
    const T* pb = bias.data().data();
    for (int64_t b = 0; b < d.b; ++b)
      for (int64_t o = 0; o < d.cout; ++o) {
        T* plane = py + (b * d.cout + o) * area;
        for (int64_t i = 0; i < area; ++i) plane[i] += pb[o];
      }
  }

  auto* tape = TapeT<T>::recording();
  if (tape && (x.requires_grad() || w.requires_grad() ||
               (has_bias && bias.requires_grad()))) {
    out.set_requires_grad(true);
    TensorT<T> xs = x, ws = w, bs = bias, os = out;
    out.set_node(tape->record(
        "conv2d", {x.node(), w.node(), has_bias ? bias.node() : -1}, out.storage(),
        [xs, ws, bs, os, d, cols, ck, area, has_bias]() mutable {
          if (!os.has_grad()) return;
          auto go = os.grad_view();
          if (has_bias && bs.requires_grad()) {
            T* db = bs.grad().data();
            for (int64_t b = 0; b < d.b; ++b)
              for (int64_t o = 0; o < d.cout; ++o) {
                const T* plane = go.data() + (b * d.cout + o) * area;
                T acc = T(0);
                for (int64_t i = 0; i < area; ++i) acc += plane[i];
                db[o] += acc;
              }
          }
          if (ws.requires_grad()) {
            T* dw = ws.grad().data();
            for (int64_t b = 0; b < d.b; ++b) {
              detail::gemm_abt_acc(go.data() + b * d.cout * area,
                                   cols->data() + b * ck * area, dw, d.cout,
                                   area, ck);
            }
          }
          if (xs.requires_grad()) {
            T* dx = xs.grad().data();
            const T* pw2 = ws.data().data();
            std::vector<T> dcol(static_cast<size_t>(ck * area));
            for (int64_t b = 0; b < d.b; ++b) {
              std::fill(dcol.begin(), dcol.end(), T(0));
              detail::gemm_atb_acc(pw2, go.data() + b * d.cout * area,
                                   dcol.data(), ck, d.cout, area);
              col2im_acc(dcol.data(), d, dx + b * d.cin * d.h * d.w);
            }
          }
        }));
  }
  check_finite(out, "conv2d");
  return out;
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, int stride, int padding) {
  return conv2d(x, w, TensorT<T>(), stride, padding);
}

template <typename T>
TensorT<T> maxpool2d(const TensorT<T>& x, int k, int stride, int padding) {
  if (x.dim() != 4) throw DimensionError("maxpool2d: input must be [B,C,H,W]");
  if (k < 1 || stride < 1 || padding < 0) throw ContractError("maxpool2d: bad k/stride/padding");
  const int64_t b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  if (k > h + 2 * padding || k > w + 2 * padding) {
    throw DimensionError("maxpool2d: window larger than padded input");
  }
  const int64_t oh = (h + 2 * padding - k) / stride + 1;
  const int64_t ow = (w + 2 * padding - k) / stride + 1;
  auto out = TensorT<T>::zeros({b, c, oh, ow});

  // Argmax (first index in row-major window order) saved for the backward.
  auto argmax = std::make_shared<std::vector<int64_t>>(
      static_cast<size_t>(out.numel()), int64_t(-1));
  const T* px = x.data().data();
  T* py = out.data().data();
  const T lowest = std::numeric_limits<T>::lowest();
#pragma omp parallel for schedule(static)
  for (int64_t bc = 0; bc < b * c; ++bc) {
    const T* plane = px + bc * h * w;
    T* oplane = py + bc * oh * ow;
    int64_t* aplane = argmax->data() + bc * oh * ow;
    for (int64_t oy = 0; oy < oh; ++oy) {
      for (int64_t ox = 0; ox < ow; ++ox) {
        T best = lowest;
        int64_t best_idx = -1;
        for (int64_t ki = 0; ki < k; ++ki) {
          int64_t iy = oy * stride - padding + ki;
          if (iy < 0 || iy >= h) continue;
          for (int64_t kj = 0; kj < k; ++kj) {
            int64_t ix = ox * stride - padding + kj;
            if (ix < 0 || ix >= w) continue;
            T v = plane[iy * w + ix];
            if (v > best) {
              best = v;
              best_idx = iy * w + ix;
            }
          }
        }
        // A window entirely inside the padding yields 0 and routes no grad.
        oplane[oy * ow + ox] = best_idx >= 0 ? best : T(0);
        aplane[oy * ow + ox] = best_idx;
      }
    }
  }

  detail::maybe_record_unary("maxpool2d", x, out,
                             [argmax, b, c, h, w, oh, ow](TensorT<T>& xs, TensorT<T>& os) {
    auto go = os.grad_view();
    T* dx = xs.grad().data();
    for (int64_t bc = 0; bc < b * c; ++bc) {
      const int64_t* aplane = argmax->data() + bc * oh * ow;
      const T* gplane = go.data() + bc * oh * ow;
      T* dplane = dx + bc * h * w;
      for (int64_t i = 0; i < oh * ow; ++i) {
        if (aplane[i] >= 0) dplane[aplane[i]] += gplane[i];
      }
    }
  });
  check_finite(out, "maxpool2d");
  return out;
}

#define PLANTDET_INSTANTIATE(T)                                                       \
  template TensorT<T> conv2d(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, \
                             int, int);                                               \
  template TensorT<T> conv2d(const TensorT<T>&, const TensorT<T>&, int, int);         \
  template TensorT<T> maxpool2d(const TensorT<T>&, int, int, int);

PLANTDET_INSTANTIATE(float)
PLANTDET_INSTANTIATE(double)
#undef PLANTDET_INSTANTIATE

}  // namespace plantdet
