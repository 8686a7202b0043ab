// SPDX-License-Identifier: Apache-2.0
#include <cstdint>

#include "op_common.hpp"
#include "plantdet/ops.hpp"

namespace plantdet {

namespace {

using detail::gemm_abt_acc;
using detail::gemm_acc;
using detail::gemm_atb_acc;

struct MatmulDims {
  int64_t batch;  // product of leading dims of a
  int64_t m, k, n;
  bool b_is_matrix;  // b has no batch dims (shared weight)
};

template <typename T>
MatmulDims check_matmul(const TensorT<T>& a, const TensorT<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) {
    throw DimensionError("matmul: operands must have rank >= 2, got " +
                         shape_str(sa) + " and " + shape_str(sb));
  }
  MatmulDims d;
  d.m = sa[sa.size() - 2];
  d.k = sa[sa.size() - 1];
  if (sb[sb.size() - 2] != d.k) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(sa) +
                         " x " + shape_str(sb));
  }
  d.n = sb[sb.size() - 1];
  d.batch = 1;
  for (size_t i = 0; i + 2 < sa.size(); ++i) d.batch *= sa[i];
  if (sb.size() == 2) {
    d.b_is_matrix = true;
  } else {
    if (sb.size() != sa.size()) {
      throw DimensionError("matmul: batch ranks disagree, " + shape_str(sa) +
                           " x " + shape_str(sb));
    }
    for (size_t i = 0; i + 2 < sa.size(); ++i) {
      if (sa[i] != sb[i]) {
        throw DimensionError("matmul: batch dimensions disagree, " +
                             shape_str(sa) + " x " + shape_str(sb));
      }
    }
    d.b_is_matrix = false;
  }
  return d;
}

}  // namespace

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  MatmulDims d = check_matmul(a, b);
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.push_back(d.n);
  auto out = TensorT<T>::zeros(out_shape);

  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* pc = out.data().data();
  const int64_t a_step = d.m * d.k;
  const int64_t b_step = d.b_is_matrix ? 0 : d.k * d.n;
  const int64_t c_step = d.m * d.n;
  for (int64_t g = 0; g < d.batch; ++g) {
    gemm_acc(pa + g * a_step, pb + g * b_step, pc + g * c_step, d.m, d.k, d.n);
  }

  detail::maybe_record_binary("matmul", a, b, out,
                              [d](TensorT<T>& x1, TensorT<T>& x2, TensorT<T>& o) {
    auto go = o.grad_view();
    const T* pb2 = x2.data().data();
    const T* pa2 = x1.data().data();
    const int64_t a_step2 = d.m * d.k;
    const int64_t b_step2 = d.b_is_matrix ? 0 : d.k * d.n;
    const int64_t c_step2 = d.m * d.n;
    if (x1.requires_grad()) {
      T* da = x1.grad().data();
      // dA = dC * B^T
      for (int64_t g = 0; g < d.batch; ++g) {
        gemm_abt_acc(go.data() + g * c_step2, pb2 + g * b_step2,
                     da + g * a_step2, d.m, d.n, d.k);
      }
    }
    if (x2.requires_grad()) {
      T* db = x2.grad().data();
      // dB = A^T * dC; with a shared matrix the batch contributions sum.
      for (int64_t g = 0; g < d.batch; ++g) {
        gemm_atb_acc(pa2 + g * a_step2, go.data() + g * c_step2,
                     db + g * b_step2, d.k, d.m, d.n);
      }
    }
  });
  check_finite(out, "matmul");
  return out;
}

template <typename T>
TensorT<T> add_rowvec(const TensorT<T>& x, const TensorT<T>& bias) {
  if (bias.dim() != 1 || x.size(-1) != bias.size(0)) {
    throw DimensionError("add_rowvec: bias " + shape_str(bias.shape()) +
                         " does not match last dim of " + shape_str(x.shape()));
  }
  const int64_t c = bias.size(0);
  const int64_t rows = x.numel() / c;
  auto out = TensorT<T>::zeros(x.shape());
  auto y = out.data();
  auto px = x.data();
  auto pb = bias.data();
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t j = 0; j < c; ++j) y[r * c + j] = px[r * c + j] + pb[j];
  }
  detail::maybe_record_binary("add_rowvec", x, bias, out,
                              [rows, c](TensorT<T>& x1, TensorT<T>& x2, TensorT<T>& o) {
    auto g = o.grad_view();
    if (x1.requires_grad()) {
      auto d = x1.grad();
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (x2.requires_grad()) {
      auto d = x2.grad();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < c; ++j) d[j] += g[r * c + j];
    }
  });
  check_finite(out, "add_rowvec");
  return out;
}

#define PLANTDET_INSTANTIATE(T)                                              \
  template TensorT<T> matmul(const TensorT<T>&, const TensorT<T>&);          \
  template TensorT<T> add_rowvec(const TensorT<T>&, const TensorT<T>&);

PLANTDET_INSTANTIATE(float)
PLANTDET_INSTANTIATE(double)
#undef PLANTDET_INSTANTIATE

}  // namespace plantdet
