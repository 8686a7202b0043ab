// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "op_common.hpp"
#include "plantdet/ops.hpp"

namespace plantdet {

using detail::maybe_record_binary;
using detail::maybe_record_unary;
using detail::require_same_shape;

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "add");
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  auto pb = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] + pb[i];
  maybe_record_binary("add", a, b, out, [](TensorT<T>& x1, TensorT<T>& x2, TensorT<T>& o) {
    auto g = o.grad_view();
    if (x1.requires_grad()) {
      auto d = x1.grad();
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (x2.requires_grad()) {
      auto d = x2.grad();
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
  check_finite(out, "add");
  return out;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "sub");
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  auto pb = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] - pb[i];
  maybe_record_binary("sub", a, b, out, [](TensorT<T>& x1, TensorT<T>& x2, TensorT<T>& o) {
    auto g = o.grad_view();
    if (x1.requires_grad()) {
      auto d = x1.grad();
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (x2.requires_grad()) {
      auto d = x2.grad();
      for (size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
    }
  });
  check_finite(out, "sub");
  return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "mul");
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  auto pb = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] * pb[i];
  maybe_record_binary("mul", a, b, out, [](TensorT<T>& x1, TensorT<T>& x2, TensorT<T>& o) {
    auto g = o.grad_view();
    auto v1 = x1.data();
    auto v2 = x2.data();
    if (x1.requires_grad()) {
      auto d = x1.grad();
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * v2[i];
    }
    if (x2.requires_grad()) {
      auto d = x2.grad();
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * v1[i];
    }
  });
  check_finite(out, "mul");
  return out;
}

template <typename T>
TensorT<T> div(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "div");
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  auto pb = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] / pb[i];
  maybe_record_binary("div", a, b, out, [](TensorT<T>& x1, TensorT<T>& x2, TensorT<T>& o) {
    auto g = o.grad_view();
    auto v1 = x1.data();
    auto v2 = x2.data();
    if (x1.requires_grad()) {
      auto d = x1.grad();
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] / v2[i];
    }
    if (x2.requires_grad()) {
      auto d = x2.grad();
      for (size_t i = 0; i < g.size(); ++i) d[i] -= g[i] * v1[i] / (v2[i] * v2[i]);
    }
  });
  check_finite(out, "div");
  return out;
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, T s) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] + s;
  maybe_record_unary("add_s", a, out, [](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
  check_finite(out, "add_s");
  return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, T s) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] * s;
  maybe_record_unary("mul_s", a, out, [s](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * s;
  });
  check_finite(out, "mul_s");
  return out;
}

template <typename T>
TensorT<T> sub_from(T s, const TensorT<T>& a) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = s - pa[i];
  maybe_record_unary("sub_from", a, out, [](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
  });
  check_finite(out, "sub_from");
  return out;
}

template <typename T>
TensorT<T> neg(const TensorT<T>& a) {
  return sub_from(T(0), a);
}

template <typename T>
TensorT<T> minimum(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "minimum");
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  auto pb = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] <= pb[i] ? pa[i] : pb[i];
  maybe_record_binary("minimum", a, b, out, [](TensorT<T>& x1, TensorT<T>& x2, TensorT<T>& o) {
    auto g = o.grad_view();
    auto v1 = x1.data();
    auto v2 = x2.data();
    if (x1.requires_grad()) {
      auto d = x1.grad();
      for (size_t i = 0; i < g.size(); ++i)
        if (v1[i] <= v2[i]) d[i] += g[i];
    }
    if (x2.requires_grad()) {
      auto d = x2.grad();
      for (size_t i = 0; i < g.size(); ++i)
        if (v1[i] > v2[i]) d[i] += g[i];
    }
  });
  check_finite(out, "minimum");
  return out;
}

template <typename T>
TensorT<T> maximum(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "maximum");
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  auto pb = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] >= pb[i] ? pa[i] : pb[i];
  maybe_record_binary("maximum", a, b, out, [](TensorT<T>& x1, TensorT<T>& x2, TensorT<T>& o) {
    auto g = o.grad_view();
    auto v1 = x1.data();
    auto v2 = x2.data();
    if (x1.requires_grad()) {
      auto d = x1.grad();
      for (size_t i = 0; i < g.size(); ++i)
        if (v1[i] >= v2[i]) d[i] += g[i];
    }
    if (x2.requires_grad()) {
      auto d = x2.grad();
      for (size_t i = 0; i < g.size(); ++i)
        if (v1[i] < v2[i]) d[i] += g[i];
    }
  });
  check_finite(out, "maximum");
  return out;
}

template <typename T>
TensorT<T> clamp_min(const TensorT<T>& a, T lo) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] >= lo ? pa[i] : lo;
  maybe_record_unary("clamp_min", a, out, [lo](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto v = x.data();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i)
      if (v[i] >= lo) d[i] += g[i];
  });
  check_finite(out, "clamp_min");
  return out;
}

template <typename T>
TensorT<T> exp(const TensorT<T>& a) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::exp(pa[i]);
  maybe_record_unary("exp", a, out, [](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto yv = o.data();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * yv[i];
  });
  check_finite(out, "exp");
  return out;
}

template <typename T>
TensorT<T> log(const TensorT<T>& a) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::log(pa[i]);
  maybe_record_unary("log", a, out, [](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto v = x.data();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] / v[i];
  });
  check_finite(out, "log");
  return out;
}

template <typename T>
TensorT<T> sqrt(const TensorT<T>& a) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::sqrt(pa[i]);
  maybe_record_unary("sqrt", a, out, [](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto yv = o.data();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * T(0.5) / yv[i];
  });
  check_finite(out, "sqrt");
  return out;
}

template <typename T>
TensorT<T> square(const TensorT<T>& a) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] * pa[i];
  maybe_record_unary("square", a, out, [](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto v = x.data();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * T(2) * v[i];
  });
  check_finite(out, "square");
  return out;
}

template <typename T>
TensorT<T> atan(const TensorT<T>& a) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::atan(pa[i]);
  maybe_record_unary("atan", a, out, [](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto v = x.data();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] / (T(1) + v[i] * v[i]);
  });
  check_finite(out, "atan");
  return out;
}

namespace {

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  T e = std::exp(x);
  return e / (T(1) + e);
}

constexpr double kGeluK = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC = 0.044715;

}  // namespace

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& a) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = stable_sigmoid(pa[i]);
  maybe_record_unary("sigmoid", a, out, [](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto yv = o.data();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * yv[i] * (T(1) - yv[i]);
  });
  check_finite(out, "sigmoid");
  return out;
}

template <typename T>
TensorT<T> silu(const TensorT<T>& a) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = pa[i] * stable_sigmoid(pa[i]);
  maybe_record_unary("silu", a, out, [](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto v = x.data();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) {
      T s = stable_sigmoid(v[i]);
      d[i] += g[i] * s * (T(1) + v[i] * (T(1) - s));
    }
  });
  check_finite(out, "silu");
  return out;
}

template <typename T>
TensorT<T> gelu(const TensorT<T>& a) {
  auto out = TensorT<T>::zeros(a.shape());
  auto y = out.data();
  auto pa = a.data();
  const T k = static_cast<T>(kGeluK);
  const T c = static_cast<T>(kGeluC);
  for (size_t i = 0; i < y.size(); ++i) {
    T x = pa[i];
    y[i] = T(0.5) * x * (T(1) + std::tanh(k * (x + c * x * x * x)));
  }
  maybe_record_unary("gelu", a, out, [k, c](TensorT<T>& x, TensorT<T>& o) {
    auto g = o.grad_view();
    auto v = x.data();
    auto d = x.grad();
    for (size_t i = 0; i < g.size(); ++i) {
      T xi = v[i];
      T u = k * (xi + c * xi * xi * xi);
      T t = std::tanh(u);
      T du = k * (T(1) + T(3) * c * xi * xi);
      d[i] += g[i] * (T(0.5) * (T(1) + t) + T(0.5) * xi * (T(1) - t * t) * du);
    }
  });
  check_finite(out, "gelu");
  return out;
}

template <typename T>
TensorT<T> activation(const TensorT<T>& x, Activation kind) {
  switch (kind) {
    case Activation::kSilu: return silu(x);
    case Activation::kGelu: return gelu(x);
    case Activation::kSigmoid: return sigmoid(x);
  }
  throw ContractError("activation: unknown kind");
}

template <typename T>
TensorT<T> sum(const TensorT<T>& a) {
  T acc = T(0);
  for (T v : a.data()) acc += v;
  auto out = TensorT<T>::scalar(acc);
  maybe_record_unary("sum", a, out, [](TensorT<T>& x, TensorT<T>& o) {
    T g = o.grad_view()[0];
    auto d = x.grad();
    for (size_t i = 0; i < d.size(); ++i) d[i] += g;
  });
  check_finite(out, "sum");
  return out;
}

template <typename T>
TensorT<T> mean(const TensorT<T>& a) {
  T acc = T(0);
  for (T v : a.data()) acc += v;
  const T inv = T(1) / static_cast<T>(a.numel());
  auto out = TensorT<T>::scalar(acc * inv);
  maybe_record_unary("mean", a, out, [inv](TensorT<T>& x, TensorT<T>& o) {
    T g = o.grad_view()[0] * inv;
    auto d = x.grad();
    for (size_t i = 0; i < d.size(); ++i) d[i] += g;
  });
  check_finite(out, "mean");
  return out;
}

#define PLANTDET_INSTANTIATE(T)                                        \
  template TensorT<T> add(const TensorT<T>&, const TensorT<T>&);       \
  template TensorT<T> sub(const TensorT<T>&, const TensorT<T>&);       \
  template TensorT<T> mul(const TensorT<T>&, const TensorT<T>&);       \
  template TensorT<T> div(const TensorT<T>&, const TensorT<T>&);       \
  template TensorT<T> add(const TensorT<T>&, T);                       \
  template TensorT<T> mul(const TensorT<T>&, T);                       \
  template TensorT<T> sub_from(T, const TensorT<T>&);                  \
  template TensorT<T> neg(const TensorT<T>&);                          \
  template TensorT<T> minimum(const TensorT<T>&, const TensorT<T>&);   \
  template TensorT<T> maximum(const TensorT<T>&, const TensorT<T>&);   \
  template TensorT<T> clamp_min(const TensorT<T>&, T);                 \
  template TensorT<T> exp(const TensorT<T>&);                          \
  template TensorT<T> log(const TensorT<T>&);                          \
  template TensorT<T> sqrt(const TensorT<T>&);                         \
  template TensorT<T> square(const TensorT<T>&);                       \
  template TensorT<T> atan(const TensorT<T>&);                         \
  template TensorT<T> sigmoid(const TensorT<T>&);                      \
  template TensorT<T> silu(const TensorT<T>&);                         \
  template TensorT<T> gelu(const TensorT<T>&);                         \
  template TensorT<T> activation(const TensorT<T>&, Activation);       \
  template TensorT<T> sum(const TensorT<T>&);                          \
  template TensorT<T> mean(const TensorT<T>&);

PLANTDET_INSTANTIATE(float)
PLANTDET_INSTANTIATE(double)
#undef PLANTDET_INSTANTIATE

}  // namespace plantdet
