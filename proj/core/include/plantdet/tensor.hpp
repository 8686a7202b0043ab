// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "plantdet/error.hpp"
#include "plantdet/rng.hpp"

namespace plantdet {

using Shape = std::vector<int64_t>;

int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);
std::vector<int64_t> strides_of(const Shape& shape);  // row-major

/// Global toggle for NaN/Inf screening after forward kernels.
bool numeric_checks_enabled();
void set_numeric_checks(bool on);

/// Global toggle for gradient recording (see NoGradGuard).
bool grad_mode_enabled();
void set_grad_mode(bool on);

/// RAII guard that disables gradient recording on this thread.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(grad_mode_enabled()) { set_grad_mode(false); }
  ~NoGradGuard() { set_grad_mode(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
struct StorageT {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // materialized on first use; same length as data
  bool requires_grad = false;
  int node = -1;  // tape node that produced this tensor, -1 for leaves
};

/// Dense row-major tensor handle. Copies are shallow: handles share storage,
/// so a parameter updated by the optimizer is seen by every holder.
/// float is the working precision; double instantiations exist for
/// finite-difference gradient checking.
template <typename T>
class TensorT {
 public:
  using value_type = T;

  TensorT() = default;

  static TensorT zeros(Shape shape, bool requires_grad = false);
  static TensorT full(Shape shape, T value, bool requires_grad = false);
  static TensorT from_data(Shape shape, std::vector<T> data,
                           bool requires_grad = false);
  static TensorT scalar(T value);
  /// I.i.d. normal(0, sigma) entries drawn from rng.
  static TensorT randn(Shape shape, Rng& rng, T sigma = T(1),
                       bool requires_grad = false);

  bool defined() const { return s_ != nullptr; }
  const Shape& shape() const { return s_->shape; }
  int64_t dim() const { return static_cast<int64_t>(s_->shape.size()); }
  int64_t size(int64_t i) const;
  int64_t numel() const { return static_cast<int64_t>(s_->data.size()); }

  std::span<T> data() { return {s_->data.data(), s_->data.size()}; }
  std::span<const T> data() const { return {s_->data.data(), s_->data.size()}; }

  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool rg) { s_->requires_grad = rg; }

  /// Gradient buffer; materialized (zero-filled) on first access.
  std::span<T> grad();
  std::span<const T> grad_view() const;  // empty span if not materialized
  bool has_grad() const { return s_ && !s_->grad.empty(); }
  void zero_grad();

  int node() const { return s_ ? s_->node : -1; }
  void set_node(int n) { s_->node = n; }

  /// Scalar value; ContractError unless numel() == 1.
  T item() const;
  T& at(std::initializer_list<int64_t> idx);
  T at(std::initializer_list<int64_t> idx) const;

  /// Same data copied into a fresh storage, detached from the tape.
  TensorT detach() const;
  /// Deep copy (keeps requires_grad, drops tape linkage).
  TensorT clone() const;

  std::shared_ptr<StorageT<T>>& storage() { return s_; }
  const std::shared_ptr<StorageT<T>>& storage() const { return s_; }

 private:
  explicit TensorT(std::shared_ptr<StorageT<T>> s) : s_(std::move(s)) {}
  std::shared_ptr<StorageT<T>> s_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

/// Reverse-mode tape. Nodes are appended in forward order; backward walks
/// them strictly in reverse, so parents always precede their consumers.
template <typename T>
class TapeT {
 public:
  struct Node {
    const char* op;
    std::vector<int> parents;  // producing node ids of the inputs, -1 = leaf
    std::shared_ptr<StorageT<T>> out;  // flow-grad buffer, reset per pass
    std::function<void()> backward;
  };

  /// Tape ops record onto on this thread (nullptr: recording off).
  static TapeT*& current();

  /// Non-null only when a tape is installed and grad mode is on.
  static TapeT* recording() {
    return grad_mode_enabled() ? current() : nullptr;
  }

  int record(const char* op, std::vector<int> parents,
             std::shared_ptr<StorageT<T>> out, std::function<void()> backward) {
    nodes_.push_back(Node{op, std::move(parents), std::move(out), std::move(backward)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  size_t size() const { return nodes_.size(); }
  const Node& node(size_t i) const { return nodes_[i]; }
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

/// RAII scope installing `tape` as the recording target on this thread.
template <typename T>
class TapeScopeT {
 public:
  explicit TapeScopeT(TapeT<T>& tape) : prev_(TapeT<T>::current()) {
    TapeT<T>::current() = &tape;
  }
  ~TapeScopeT() { TapeT<T>::current() = prev_; }
  TapeScopeT(const TapeScopeT&) = delete;
  TapeScopeT& operator=(const TapeScopeT&) = delete;

 private:
  TapeT<T>* prev_;
};

using Tape = TapeT<float>;
using Tape64 = TapeT<double>;
using TapeScope = TapeScopeT<float>;
using TapeScope64 = TapeScopeT<double>;

/// Accumulates d(loss)/d(x) into every requires_grad leaf reachable from the
/// active tape. Node outputs carry per-pass flow gradients that are reset on
/// every call, so repeated calls add exactly one d(loss)/dx each; zero_grad
/// resets the leaves.
template <typename T>
void backward(TensorT<T>& loss);

/// Throws NumericError if t contains NaN/Inf (when numeric checks are on).
template <typename T>
void check_finite(const TensorT<T>& t, const char* op);

}  // namespace plantdet
