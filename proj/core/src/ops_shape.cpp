// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <numeric>
#include <vector>

#include "op_common.hpp"
#include "plantdet/ops.hpp"

namespace plantdet {

template <typename T>
TensorT<T> concat(const std::vector<TensorT<T>>& xs, int64_t axis) {
  if (xs.empty()) throw ContractError("concat: empty input list");
  const int64_t rank = xs[0].dim();
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw DimensionError("concat: axis out of range");
  int64_t cat_dim = 0;
  for (const auto& x : xs) {
    if (x.dim() != rank) throw DimensionError("concat: rank mismatch");
    for (int64_t i = 0; i < rank; ++i) {
      if (i != axis && x.size(i) != xs[0].size(i)) {
        throw DimensionError("concat: shape mismatch off the concat axis: " +
                             shape_str(x.shape()) + " vs " + shape_str(xs[0].shape()));
      }
    }
    cat_dim += x.size(axis);
  }
  Shape out_shape = xs[0].shape();
  out_shape[axis] = cat_dim;
  auto out = TensorT<T>::zeros(out_shape);

  // outer x (axis block) x inner layout
  int64_t outer = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= out_shape[i];
  int64_t inner = 1;
  for (int64_t i = axis + 1; i < rank; ++i) inner *= out_shape[i];

  T* py = out.data().data();
  const int64_t out_row = cat_dim * inner;
  int64_t offset = 0;
  for (const auto& x : xs) {
    const int64_t nrows = x.size(axis) * inner;
    const T* px = x.data().data();
    for (int64_t o = 0; o < outer; ++o) {
      std::memcpy(py + o * out_row + offset, px + o * nrows,
                  static_cast<size_t>(nrows) * sizeof(T));
    }
    offset += nrows;
  }

  auto* tape = TapeT<T>::recording();
  bool any = false;
  for (const auto& x : xs) any = any || x.requires_grad();
  if (tape && any) {
    out.set_requires_grad(true);
    std::vector<TensorT<T>> parts = xs;
    TensorT<T> os = out;
    std::vector<int> parents;
    for (const auto& x : xs) parents.push_back(x.node());
    out.set_node(tape->record("concat", std::move(parents), out.storage(),
                              [parts, os, outer, inner, out_row]() mutable {
      if (!os.has_grad()) return;
      auto go = os.grad_view();
      int64_t off = 0;
      for (auto& p : parts) {
        const int64_t nrows = p.numel() / outer;
        if (p.requires_grad()) {
          auto d = p.grad();
          for (int64_t o = 0; o < outer; ++o)
            for (int64_t i = 0; i < nrows; ++i)
              d[o * nrows + i] += go[o * out_row + off + i];
        }
        off += nrows;
      }
    }));
  }
  check_finite(out, "concat");
  return out;
}

template <typename T>
TensorT<T> upsample_nearest2x(const TensorT<T>& x) {
  if (x.dim() < 2) throw DimensionError("upsample_nearest2x: rank must be >= 2");
  const int64_t h = x.size(-2), w = x.size(-1);
  const int64_t planes = x.numel() / (h * w);
  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = h * 2;
  out_shape[out_shape.size() - 1] = w * 2;
  auto out = TensorT<T>::zeros(out_shape);
  const T* px = x.data().data();
  T* py = out.data().data();
  for (int64_t p = 0; p < planes; ++p) {
    const T* ip = px + p * h * w;
    T* op = py + p * 4 * h * w;
    for (int64_t y = 0; y < 2 * h; ++y) {
      const T* irow = ip + (y / 2) * w;
      T* orow = op + y * 2 * w;
      for (int64_t xcol = 0; xcol < 2 * w; ++xcol) orow[xcol] = irow[xcol / 2];
    }
  }
  detail::maybe_record_unary("upsample_nearest2x", x, out,
                             [planes, h, w](TensorT<T>& xs, TensorT<T>& os) {
    auto go = os.grad_view();
    auto dx = xs.grad();
    for (int64_t p = 0; p < planes; ++p) {
      const T* gp = go.data() + p * 4 * h * w;
      T* dp = dx.data() + p * h * w;
      for (int64_t y = 0; y < 2 * h; ++y) {
        const T* grow = gp + y * 2 * w;
        T* drow = dp + (y / 2) * w;
        for (int64_t xcol = 0; xcol < 2 * w; ++xcol) drow[xcol / 2] += grow[xcol];
      }
    }
  });
  check_finite(out, "upsample_nearest2x");
  return out;
}

template <typename T>
TensorT<T> reshape(const TensorT<T>& x, Shape shape) {
  if (numel_of(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                         shape_str(shape));
  }
  auto out = TensorT<T>::from_data(shape, {x.data().begin(), x.data().end()});
  detail::maybe_record_unary("reshape", x, out, [](TensorT<T>& xs, TensorT<T>& os) {
    auto go = os.grad_view();
    auto d = xs.grad();
    for (size_t i = 0; i < go.size(); ++i) d[i] += go[i];
  });
  return out;
}

template <typename T>
TensorT<T> permute(const TensorT<T>& x, const std::vector<int64_t>& order) {
  const int64_t rank = x.dim();
  if (static_cast<int64_t>(order.size()) != rank) {
    throw DimensionError("permute: order length != rank");
  }
  std::vector<bool> seen(order.size(), false);
  Shape out_shape(order.size());
  for (size_t i = 0; i < order.size(); ++i) {
    int64_t o = order[i];
    if (o < 0 || o >= rank || seen[o]) throw DimensionError("permute: invalid order");
    seen[o] = true;
    out_shape[i] = x.size(o);
  }
  auto out = TensorT<T>::zeros(out_shape);
  auto in_strides = strides_of(x.shape());
  auto out_strides = strides_of(out_shape);
  const T* px = x.data().data();
  T* py = out.data().data();
  const int64_t n = x.numel();
  // out[i0,..] = in[order[i0],..]; walk output linearly, decode digits.
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    int64_t rem = i, src = 0;
    for (int64_t a = 0; a < rank; ++a) {
      int64_t digit = rem / out_strides[a];
      rem -= digit * out_strides[a];
      src += digit * in_strides[order[a]];
    }
    py[i] = px[src];
  }
  detail::maybe_record_unary("permute", x, out,
                             [order, in_strides, out_strides, rank, n](TensorT<T>& xs, TensorT<T>& os) {
    auto go = os.grad_view();
    auto d = xs.grad();
    for (int64_t i = 0; i < n; ++i) {
      int64_t rem = i, src = 0;
      for (int64_t a = 0; a < rank; ++a) {
        int64_t digit = rem / out_strides[a];
        rem -= digit * out_strides[a];
        src += digit * in_strides[order[a]];
      }
      d[src] += go[i];
    }
  });
  return out;
}

template <typename T>
TensorT<T> slice(const TensorT<T>& x, const std::vector<int64_t>& starts,
                 const std::vector<int64_t>& sizes) {
  const int64_t rank = x.dim();
  if (static_cast<int64_t>(starts.size()) != rank ||
      static_cast<int64_t>(sizes.size()) != rank) {
    throw DimensionError("slice: starts/sizes length != rank");
  }
  Shape out_shape(sizes.begin(), sizes.end());
  for (int64_t a = 0; a < rank; ++a) {
    if (starts[a] < 0 || sizes[a] <= 0 || starts[a] + sizes[a] > x.size(a)) {
      throw DimensionError("slice: window out of bounds on axis " + std::to_string(a));
    }
  }
  auto out = TensorT<T>::zeros(out_shape);
  auto in_strides = strides_of(x.shape());
  auto out_strides = strides_of(out_shape);
  const T* px = x.data().data();
  T* py = out.data().data();
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) {
    int64_t rem = i, src = 0;
    for (int64_t a = 0; a < rank; ++a) {
      int64_t digit = rem / out_strides[a];
      rem -= digit * out_strides[a];
      src += (digit + starts[a]) * in_strides[a];
    }
    py[i] = px[src];
  }
  detail::maybe_record_unary("slice", x, out,
                             [starts, in_strides, out_strides, rank, n](TensorT<T>& xs, TensorT<T>& os) {
    auto go = os.grad_view();
    auto d = xs.grad();
    for (int64_t i = 0; i < n; ++i) {
      int64_t rem = i, src = 0;
      for (int64_t a = 0; a < rank; ++a) {
        int64_t digit = rem / out_strides[a];
        rem -= digit * out_strides[a];
        src += (digit + starts[a]) * in_strides[a];
      }
      d[src] += go[i];
    }
  });
  return out;
}

template <typename T>
TensorT<T> take_rows(const TensorT<T>& x, const std::vector<int64_t>& rows) {
  if (x.dim() != 2) throw DimensionError("take_rows: input must be 2-D");
  const int64_t r = x.size(0), c = x.size(1);
  for (int64_t idx : rows) {
    if (idx < 0 || idx >= r) throw DimensionError("take_rows: row index out of range");
  }
  auto out = TensorT<T>::zeros({static_cast<int64_t>(rows.size()), c});
  const T* px = x.data().data();
  T* py = out.data().data();
  for (size_t i = 0; i < rows.size(); ++i) {
    std::memcpy(py + i * c, px + rows[i] * c, static_cast<size_t>(c) * sizeof(T));
  }
  detail::maybe_record_unary("take_rows", x, out,
                             [rows, c](TensorT<T>& xs, TensorT<T>& os) {
    auto go = os.grad_view();
    auto d = xs.grad();
    for (size_t i = 0; i < rows.size(); ++i)
      for (int64_t j = 0; j < c; ++j) d[rows[i] * c + j] += go[i * c + j];
  });
  return out;
}

#define PLANTDET_INSTANTIATE(T)                                                      \
  template TensorT<T> concat(const std::vector<TensorT<T>>&, int64_t);               \
  template TensorT<T> upsample_nearest2x(const TensorT<T>&);                         \
  template TensorT<T> reshape(const TensorT<T>&, Shape);                             \
  template TensorT<T> permute(const TensorT<T>&, const std::vector<int64_t>&);       \
  template TensorT<T> slice(const TensorT<T>&, const std::vector<int64_t>&,          \
                            const std::vector<int64_t>&);                            \
  template TensorT<T> take_rows(const TensorT<T>&, const std::vector<int64_t>&);

PLANTDET_INSTANTIATE(float)
PLANTDET_INSTANTIATE(double)
#undef PLANTDET_INSTANTIATE

}  // namespace plantdet
