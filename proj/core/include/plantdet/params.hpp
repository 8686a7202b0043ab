// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "plantdet/tensor.hpp"

namespace plantdet {

/// Named registry of learnable parameters and non-learnable buffers
/// (batch-norm running stats). Iteration order is lexicographic by name,
/// which makes optimizer updates and checkpoints deterministic.
template <typename T>
class ParamStoreT {
 public:
  void add_param(const std::string& name, TensorT<T> t) {
    if (params_.count(name) || buffers_.count(name)) {
      throw ContractError("ParamStore: duplicate name " + name);
    }
    t.set_requires_grad(true);
    params_.emplace(name, std::move(t));
  }

  void add_buffer(const std::string& name, TensorT<T> t) {
    if (params_.count(name) || buffers_.count(name)) {
      throw ContractError("ParamStore: duplicate name " + name);
    }
    t.set_requires_grad(false);
    buffers_.emplace(name, std::move(t));
  }

  const std::map<std::string, TensorT<T>>& params() const { return params_; }
  const std::map<std::string, TensorT<T>>& buffers() const { return buffers_; }
  std::map<std::string, TensorT<T>>& params() { return params_; }
  std::map<std::string, TensorT<T>>& buffers() { return buffers_; }

  TensorT<T> param(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("ParamStore: no parameter " + name);
    return it->second;
  }

  int64_t parameter_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [name, t] : params_) t.zero_grad();
  }

 private:
  std::map<std::string, TensorT<T>> params_;
  std::map<std::string, TensorT<T>> buffers_;
};

using ParamStore = ParamStoreT<float>;

}  // namespace plantdet
