// SPDX-License-Identifier: Apache-2.0
#include "plantdet/tensor.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

namespace plantdet {

int64_t numel_of(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw DimensionError("non-positive dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::vector<int64_t> strides_of(const Shape& shape) {
  std::vector<int64_t> st(shape.size(), 1);
  for (int64_t i = static_cast<int64_t>(shape.size()) - 2; i >= 0; --i) {
    st[i] = st[i + 1] * shape[i + 1];
  }
  return st;
}

namespace {
std::atomic<bool> g_numeric_checks{true};
thread_local bool g_grad_mode = true;
}  // namespace

bool numeric_checks_enabled() { return g_numeric_checks.load(std::memory_order_relaxed); }
void set_numeric_checks(bool on) { g_numeric_checks.store(on, std::memory_order_relaxed); }

bool grad_mode_enabled() { return g_grad_mode; }
void set_grad_mode(bool on) { g_grad_mode = on; }

template <typename T>
TapeT<T>*& TapeT<T>::current() {
  thread_local TapeT<T>* cur = nullptr;
  return cur;
}

template <typename T>
TensorT<T> TensorT<T>::zeros(Shape shape, bool requires_grad) {
  auto s = std::make_shared<StorageT<T>>();
  int64_t n = numel_of(shape);
  s->shape = std::move(shape);
  s->data.assign(static_cast<size_t>(n), T(0));
  s->requires_grad = requires_grad;
  return TensorT(std::move(s));
}

template <typename T>
TensorT<T> TensorT<T>::full(Shape shape, T value, bool requires_grad) {
  TensorT t = zeros(std::move(shape), requires_grad);
  for (auto& v : t.data()) v = value;
  return t;
}

template <typename T>
TensorT<T> TensorT<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad) {
  if (numel_of(shape) != static_cast<int64_t>(data.size())) {
    throw DimensionError("from_data: " + std::to_string(data.size()) +
                         " values for shape " + shape_str(shape));
  }
  auto s = std::make_shared<StorageT<T>>();
  s->shape = std::move(shape);
  s->data = std::move(data);
  s->requires_grad = requires_grad;
  return TensorT(std::move(s));
}

template <typename T>
TensorT<T> TensorT<T>::scalar(T value) {
  return from_data({1}, {value});
}

template <typename T>
TensorT<T> TensorT<T>::randn(Shape shape, Rng& rng, T sigma, bool requires_grad) {
  TensorT t = zeros(std::move(shape), requires_grad);
  for (auto& v : t.data()) v = static_cast<T>(rng.normal()) * sigma;
  return t;
}

template <typename T>
int64_t TensorT<T>::size(int64_t i) const {
  int64_t d = dim();
  if (i < 0) i += d;
  if (i < 0 || i >= d) throw DimensionError("size index out of range");
  return s_->shape[i];
}

template <typename T>
std::span<T> TensorT<T>::grad() {
  if (s_->grad.empty()) s_->grad.assign(s_->data.size(), T(0));
  return {s_->grad.data(), s_->grad.size()};
}

template <typename T>
std::span<const T> TensorT<T>::grad_view() const {
  return {s_->grad.data(), s_->grad.size()};
}

template <typename T>
void TensorT<T>::zero_grad() {
  if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), T(0));
}

template <typename T>
T TensorT<T>::item() const {
  if (!s_ || s_->data.size() != 1) {
    throw ContractError("item() requires a scalar tensor, got shape " +
                        (s_ ? shape_str(s_->shape) : std::string("<undefined>")));
  }
  return s_->data[0];
}

template <typename T>
T& TensorT<T>::at(std::initializer_list<int64_t> idx) {
  auto st = strides_of(s_->shape);
  if (idx.size() != st.size()) throw DimensionError("at(): rank mismatch");
  int64_t off = 0;
  size_t k = 0;
  for (int64_t i : idx) off += i * st[k++];
  return s_->data[static_cast<size_t>(off)];
}

template <typename T>
T TensorT<T>::at(std::initializer_list<int64_t> idx) const {
  return const_cast<TensorT*>(this)->at(idx);
}

template <typename T>
TensorT<T> TensorT<T>::detach() const {
  return from_data(s_->shape, s_->data, /*requires_grad=*/false);
}

template <typename T>
TensorT<T> TensorT<T>::clone() const {
  return from_data(s_->shape, s_->data, s_->requires_grad);
}

template <typename T>
void backward(TensorT<T>& loss) {
  auto* tape = TapeT<T>::current();
  if (tape == nullptr || tape->size() == 0) {
    throw ContractError("backward: no active non-empty tape");
  }
  if (loss.numel() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_str(loss.shape()));
  }
  // Node outputs are flow buffers: reset them so this pass carries exactly
  // one d(loss); leaf gradients are left to accumulate.
  for (size_t i = 0; i < tape->size(); ++i) {
    auto& out = tape->node(i).out;
    if (out && !out->grad.empty()) {
      std::fill(out->grad.begin(), out->grad.end(), T(0));
    }
  }
  loss.grad()[0] += T(1);
  for (size_t i = tape->size(); i > 0; --i) {
    tape->node(i - 1).backward();
  }
}

template <typename T>
void check_finite(const TensorT<T>& t, const char* op) {
  if (!numeric_checks_enabled()) return;
  for (T v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + ": non-finite value in output");
    }
  }
}

template class TensorT<float>;
template class TensorT<double>;
template class TapeT<float>;
template class TapeT<double>;
template void backward(TensorT<float>&);
template void backward(TensorT<double>&);
template void check_finite(const TensorT<float>&, const char*);
template void check_finite(const TensorT<double>&, const char*);

}  // namespace plantdet
