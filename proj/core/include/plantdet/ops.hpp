// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "plantdet/tensor.hpp"

namespace plantdet {

enum class Activation { kSilu, kGelu, kSigmoid };

// ---- elementwise -----------------------------------------------------------

template <typename T> TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> div(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> add(const TensorT<T>& a, T s);
template <typename T> TensorT<T> mul(const TensorT<T>& a, T s);
/// s - a, elementwise.
template <typename T> TensorT<T> sub_from(T s, const TensorT<T>& a);
template <typename T> TensorT<T> neg(const TensorT<T>& a);

/// Elementwise min/max; ties route the gradient to the first argument.
template <typename T> TensorT<T> minimum(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> maximum(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> clamp_min(const TensorT<T>& a, T lo);

template <typename T> TensorT<T> exp(const TensorT<T>& a);
template <typename T> TensorT<T> log(const TensorT<T>& a);
template <typename T> TensorT<T> sqrt(const TensorT<T>& a);
template <typename T> TensorT<T> square(const TensorT<T>& a);
template <typename T> TensorT<T> atan(const TensorT<T>& a);

/// activation(x, kind):
///   silu(x)    = x * sigmoid(x)
///   gelu(x)    = 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))   (tanh form)
///   sigmoid(x) = 1 / (1 + exp(-x))
template <typename T> TensorT<T> activation(const TensorT<T>& x, Activation kind);
template <typename T> TensorT<T> silu(const TensorT<T>& x);
template <typename T> TensorT<T> gelu(const TensorT<T>& x);
template <typename T> TensorT<T> sigmoid(const TensorT<T>& x);

// ---- reductions -------------------------------------------------------------

template <typename T> TensorT<T> sum(const TensorT<T>& a);   // scalar
template <typename T> TensorT<T> mean(const TensorT<T>& a);  // scalar

// ---- linear algebra ---------------------------------------------------------

/// Batched matrix product a[..,M,K] x b[..,K,N] -> [..,M,N]. Leading batch
/// dimensions must match exactly, or b may be a plain matrix shared across
/// the whole batch (the weight case).
template <typename T> TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b);

/// x[..,C] + bias[C], broadcast over leading dims.
template <typename T> TensorT<T> add_rowvec(const TensorT<T>& x, const TensorT<T>& bias);

// ---- convolution / pooling / norms ------------------------------------------

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& bias,
                  int stride, int padding);
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, int stride, int padding);

template <typename T>
TensorT<T> maxpool2d(const TensorT<T>& x, int k, int stride, int padding);

template <typename T>
TensorT<T> layer_norm(const TensorT<T>& x, const TensorT<T>& gamma,
                      const TensorT<T>& beta, double eps);

/// Train mode normalizes with batch statistics (biased variance) and updates
/// running stats in place: r <- (1-momentum) r + momentum * stat (the running
/// variance uses the unbiased estimate). Eval mode uses the running stats.
template <typename T>
TensorT<T> batch_norm2d(const TensorT<T>& x, const TensorT<T>& gamma,
                        const TensorT<T>& beta, TensorT<T>& running_mean,
                        TensorT<T>& running_var, double momentum, double eps,
                        bool training);

/// Max-subtracted softmax over the last axis.
template <typename T> TensorT<T> softmax_lastdim(const TensorT<T>& x);

// ---- shape ops ---------------------------------------------------------------

template <typename T> TensorT<T> concat(const std::vector<TensorT<T>>& xs, int64_t axis);
template <typename T> TensorT<T> upsample_nearest2x(const TensorT<T>& x);
template <typename T> TensorT<T> reshape(const TensorT<T>& x, Shape shape);
template <typename T> TensorT<T> permute(const TensorT<T>& x, const std::vector<int64_t>& order);
template <typename T>
TensorT<T> slice(const TensorT<T>& x, const std::vector<int64_t>& starts,
                 const std::vector<int64_t>& sizes);
/// Row gather on a 2-D tensor; backward scatter-adds into the source rows.
template <typename T>
TensorT<T> take_rows(const TensorT<T>& x, const std::vector<int64_t>& rows);

}  // namespace plantdet
