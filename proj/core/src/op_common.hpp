// SPDX-License-Identifier: Apache-2.0
// Internal helpers shared by the op kernels. Not installed.
#pragma once

#include <string>

#include "plantdet/tensor.hpp"

namespace plantdet::detail {

// C[M,N] += A[M,K] * B[K,N], row-major. Each output row is owned by one
// thread, so results are bit-deterministic regardless of thread count.
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
      T av = arow[p];
      const T* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M,N] += A[M,K] * B[N,K]^T
template <typename T>
void gemm_abt_acc(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = T(0);
      for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C[M,N] += A[K,M]^T * B[K,N]
template <typename T>
void gemm_atb_acc(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      T av = a[p * m + i];
      const T* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
inline void require_same_shape(const TensorT<T>& a, const TensorT<T>& b,
                               const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

/// Records a unary node if grad mode is on and x participates.
/// back(x, out) runs at backward time; out's grad is already populated.
template <typename T, class BackFn>
inline void maybe_record_unary(const char* op, const TensorT<T>& x,
                               TensorT<T>& out, BackFn back) {
  auto* tape = TapeT<T>::recording();
  if (!tape || !x.requires_grad()) return;
  out.set_requires_grad(true);
  TensorT<T> xs = x;
  TensorT<T> os = out;
  out.set_node(tape->record(op, {x.node()}, out.storage(), [xs, os, back]() mutable {
    if (!os.has_grad()) return;
    back(xs, os);
  }));
}

template <typename T, class BackFn>
inline void maybe_record_binary(const char* op, const TensorT<T>& a,
                                const TensorT<T>& b, TensorT<T>& out,
                                BackFn back) {
  auto* tape = TapeT<T>::recording();
  if (!tape || (!a.requires_grad() && !b.requires_grad())) return;
  out.set_requires_grad(true);
  TensorT<T> as = a;
  TensorT<T> bs = b;
  TensorT<T> os = out;
  out.set_node(tape->record(op, {a.node(), b.node()}, out.storage(),
                            [as, bs, os, back]() mutable {
    if (!os.has_grad()) return;
    back(as, bs, os);
  }));
}

}  // namespace plantdet::detail
