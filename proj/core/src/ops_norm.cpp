// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <memory>
#include <vector>

#include "op_common.hpp"
#include "plantdet/ops.hpp"

namespace plantdet {

template <typename T>
TensorT<T> layer_norm(const TensorT<T>& x, const TensorT<T>& gamma,
                      const TensorT<T>& beta, double eps) {
  if (x.dim() < 1) throw DimensionError("layer_norm: input must have rank >= 1");
  const int64_t d = x.size(-1);
  if (gamma.dim() != 1 || gamma.size(0) != d || beta.dim() != 1 || beta.size(0) != d) {
    throw DimensionError("layer_norm: gamma/beta must be [D] with D=" + std::to_string(d));
  }
  if (eps <= 0) throw ContractError("layer_norm: eps must be positive");
  const int64_t rows = x.numel() / d;
  auto out = TensorT<T>::zeros(x.shape());
  // Normalized activations and inverse deviation are saved for the backward.
  auto xhat = std::make_shared<std::vector<T>>(static_cast<size_t>(x.numel()));
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));

  auto px = x.data();
  auto pg = gamma.data();
  auto pb = beta.data();
  auto py = out.data();
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = px.data() + r * d;
    T mu = T(0);
    for (int64_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<T>(d);
    T var = T(0);
    for (int64_t j = 0; j < d; ++j) {
      T c = xr[j] - mu;
      var += c * c;
    }
    var /= static_cast<T>(d);  // biased
    T is = T(1) / std::sqrt(var + static_cast<T>(eps));
    (*inv_std)[r] = is;
    for (int64_t j = 0; j < d; ++j) {
      T xh = (xr[j] - mu) * is;
      (*xhat)[r * d + j] = xh;
      py[r * d + j] = xh * pg[j] + pb[j];
    }
  }

  auto* tape = TapeT<T>::recording();
  if (tape && (x.requires_grad() || gamma.requires_grad() || beta.requires_grad())) {
    out.set_requires_grad(true);
    TensorT<T> xs = x, gs = gamma, bs = beta, os = out;
    out.set_node(tape->record(
        "layer_norm", {x.node(), gamma.node(), beta.node()}, out.storage(),
        [xs, gs, bs, os, xhat, inv_std, rows, d]() mutable {
          if (!os.has_grad()) return;
          auto go = os.grad_view();
          auto pg2 = gs.data();
          if (gs.requires_grad()) {
            auto dg = gs.grad();
            for (int64_t r = 0; r < rows; ++r)
              for (int64_t j = 0; j < d; ++j)
                dg[j] += go[r * d + j] * (*xhat)[r * d + j];
          }
          if (bs.requires_grad()) {
            auto db = bs.grad();
            for (int64_t r = 0; r < rows; ++r)
              for (int64_t j = 0; j < d; ++j) db[j] += go[r * d + j];
          }
          if (xs.requires_grad()) {
            auto dx = xs.grad();
            for (int64_t r = 0; r < rows; ++r) {
              // dxhat = dy * gamma; dx = (dxhat - mean(dxhat)
              //         - xhat * mean(dxhat*xhat)) * inv_std
              T m1 = T(0), m2 = T(0);
              for (int64_t j = 0; j < d; ++j) {
                T dh = go[r * d + j] * pg2[j];
                m1 += dh;
                m2 += dh * (*xhat)[r * d + j];
              }
              m1 /= static_cast<T>(d);
              m2 /= static_cast<T>(d);
              T is = (*inv_std)[r];
              for (int64_t j = 0; j < d; ++j) {
                T dh = go[r * d + j] * pg2[j];
                dx[r * d + j] += (dh - m1 - (*xhat)[r * d + j] * m2) * is;
              }
            }
          }
        }));
  }
  check_finite(out, "layer_norm");
  return out;
}

template <typename T>
TensorT<T> batch_norm2d(const TensorT<T>& x, const TensorT<T>& gamma,
                        const TensorT<T>& beta, TensorT<T>& running_mean,
                        TensorT<T>& running_var, double momentum, double eps,
                        bool training) {
  if (x.dim() != 4) throw DimensionError("batch_norm2d: input must be [B,C,H,W]");
  const int64_t b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  if (gamma.size(0) != c || beta.size(0) != c || running_mean.size(0) != c ||
      running_var.size(0) != c) {
    throw DimensionError("batch_norm2d: parameter length != channel count");
  }
  const int64_t n = b * h * w;
  if (training && n < 2) {
    throw ContractError("batch_norm2d: degenerate batch (B*H*W < 2) in train mode");
  }
  auto out = TensorT<T>::zeros(x.shape());
  auto xhat = std::make_shared<std::vector<T>>();
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(c));

  auto px = x.data();
  auto pg = gamma.data();
  auto pb = beta.data();
  auto py = out.data();
  const int64_t area = h * w;

  if (training) {
    xhat->resize(static_cast<size_t>(x.numel()));
    auto rm = running_mean.data();
    auto rv = running_var.data();
    for (int64_t ch = 0; ch < c; ++ch) {
      T mu = T(0);
      for (int64_t bi = 0; bi < b; ++bi) {
        const T* plane = px.data() + (bi * c + ch) * area;
        for (int64_t i = 0; i < area; ++i) mu += plane[i];
      }
      mu /= static_cast<T>(n);
      T var = T(0);
      for (int64_t bi = 0; bi < b; ++bi) {
        const T* plane = px.data() + (bi * c + ch) * area;
        for (int64_t i = 0; i < area; ++i) {
          T d0 = plane[i] - mu;
          var += d0 * d0;
        }
      }
      var /= static_cast<T>(n);  // biased, used for normalization
      T is = T(1) / std::sqrt(var + static_cast<T>(eps));
      (*inv_std)[ch] = is;
      T unbiased = var * static_cast<T>(n) / static_cast<T>(n - 1);
      rm[ch] = static_cast<T>(1.0 - momentum) * rm[ch] + static_cast<T>(momentum) * mu;
      rv[ch] = static_cast<T>(1.0 - momentum) * rv[ch] + static_cast<T>(momentum) * unbiased;
      for (int64_t bi = 0; bi < b; ++bi) {
        const T* plane = px.data() + (bi * c + ch) * area;
        T* oplane = py.data() + (bi * c + ch) * area;
        T* hplane = xhat->data() + (bi * c + ch) * area;
        for (int64_t i = 0; i < area; ++i) {
          T xh = (plane[i] - mu) * is;
          hplane[i] = xh;
          oplane[i] = xh * pg[ch] + pb[ch];
        }
      }
    }
  } else {
    auto rm = running_mean.data();
    auto rv = running_var.data();
    for (int64_t ch = 0; ch < c; ++ch) {
      T is = T(1) / std::sqrt(rv[ch] + static_cast<T>(eps));
      (*inv_std)[ch] = is;
      T scale = pg[ch] * is;
      T shift = pb[ch] - rm[ch] * scale;
      for (int64_t bi = 0; bi < b; ++bi) {
        const T* plane = px.data() + (bi * c + ch) * area;
        T* oplane = py.data() + (bi * c + ch) * area;
        for (int64_t i = 0; i < area; ++i) oplane[i] = plane[i] * scale + shift;
      }
    }
  }

  auto* tape = TapeT<T>::recording();
  if (tape && (x.requires_grad() || gamma.requires_grad() || beta.requires_grad())) {
    out.set_requires_grad(true);
    TensorT<T> xs = x, gs = gamma, bs = beta, os = out;
    out.set_node(tape->record(
        "batch_norm2d", {x.node(), gamma.node(), beta.node()}, out.storage(),
        [xs, gs, bs, os, xhat, inv_std, b, c, area, n, training]() mutable {
          if (!os.has_grad()) return;
          auto go = os.grad_view();
          auto pg2 = gs.data();
          if (training) {
            for (int64_t ch = 0; ch < c; ++ch) {
              T sum_dy = T(0), sum_dy_xh = T(0);
              for (int64_t bi = 0; bi < b; ++bi) {
                const T* gplane = go.data() + (bi * c + ch) * area;
                const T* hplane = xhat->data() + (bi * c + ch) * area;
                for (int64_t i = 0; i < area; ++i) {
                  sum_dy += gplane[i];
                  sum_dy_xh += gplane[i] * hplane[i];
                }
              }
              if (gs.requires_grad()) gs.grad()[ch] += sum_dy_xh;
              if (bs.requires_grad()) bs.grad()[ch] += sum_dy;
              if (xs.requires_grad()) {
                auto dx = xs.grad();
                T is = (*inv_std)[ch];
                T g = pg2[ch];
                T m1 = sum_dy / static_cast<T>(n);
                T m2 = sum_dy_xh / static_cast<T>(n);
                for (int64_t bi = 0; bi < b; ++bi) {
                  const T* gplane = go.data() + (bi * c + ch) * area;
                  const T* hplane = xhat->data() + (bi * c + ch) * area;
                  T* dplane = dx.data() + (bi * c + ch) * area;
                  for (int64_t i = 0; i < area; ++i) {
                    dplane[i] += g * is * (gplane[i] - m1 - hplane[i] * m2);
                  }
                }
              }
            }
          } else {
            // Eval mode: running stats are constants.
            for (int64_t ch = 0; ch < c; ++ch) {
              T is = (*inv_std)[ch];
              for (int64_t bi = 0; bi < b; ++bi) {
                const T* gplane = go.data() + (bi * c + ch) * area;
                if (xs.requires_grad()) {
                  T* dplane = xs.grad().data() + (bi * c + ch) * area;
                  T scale = pg2[ch] * is;
                  for (int64_t i = 0; i < area; ++i) dplane[i] += gplane[i] * scale;
                }
              }
            }
          }
        }));
  }
  check_finite(out, "batch_norm2d");
  return out;
}

template <typename T>
TensorT<T> softmax_lastdim(const TensorT<T>& x) {
  if (x.dim() < 1) throw DimensionError("softmax_lastdim: rank must be >= 1");
  const int64_t d = x.size(-1);
  const int64_t rows = x.numel() / d;
  auto out = TensorT<T>::zeros(x.shape());
  auto px = x.data();
  auto py = out.data();
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = px.data() + r * d;
    T* yr = py.data() + r * d;
    T mx = xr[0];
    for (int64_t j = 1; j < d; ++j) mx = xr[j] > mx ? xr[j] : mx;
    T z = T(0);
    for (int64_t j = 0; j < d; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      z += yr[j];
    }
    T inv = T(1) / z;
    for (int64_t j = 0; j < d; ++j) yr[j] *= inv;
  }
  detail::maybe_record_unary("softmax_lastdim", x, out,
                             [rows, d](TensorT<T>& xs, TensorT<T>& os) {
    auto go = os.grad_view();
    auto yv = os.data();
    auto dx = xs.grad();
    for (int64_t r = 0; r < rows; ++r) {
      const T* yr = yv.data() + r * d;
      const T* gr = go.data() + r * d;
      T dot = T(0);
      for (int64_t j = 0; j < d; ++j) dot += yr[j] * gr[j];
      T* dr = dx.data() + r * d;
      for (int64_t j = 0; j < d; ++j) dr[j] += yr[j] * (gr[j] - dot);
    }
  });
  check_finite(out, "softmax_lastdim");
  return out;
}

#define PLANTDET_INSTANTIATE(T)                                                     \
  template TensorT<T> layer_norm(const TensorT<T>&, const TensorT<T>&,              \
                                 const TensorT<T>&, double);                        \
  template TensorT<T> batch_norm2d(const TensorT<T>&, const TensorT<T>&,            \
                                   const TensorT<T>&, TensorT<T>&, TensorT<T>&,     \
                                   double, double, bool);                           \
  template TensorT<T> softmax_lastdim(const TensorT<T>&);

PLANTDET_INSTANTIATE(float)
PLANTDET_INSTANTIATE(double)
#undef PLANTDET_INSTANTIATE

}  // namespace plantdet
