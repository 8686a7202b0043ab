// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "plantdet/params.hpp"

namespace plantdet {

/// Per-parameter momentum buffers, keyed by parameter name.
template <typename T>
struct SgdStateT {
  std::map<std::string, std::vector<T>> velocity;
};

using SgdState = SgdStateT<float>;

/// One SGD step over every parameter in the store, in name order:
///   v <- momentum * v + g + weight_decay * p
///   p <- p - lr * v
/// Parameters whose gradient was never populated raise a ContractError
/// naming the offender.
template <typename T>
void sgd_step(ParamStoreT<T>& params, SgdStateT<T>& state, double lr,
              double momentum, double weight_decay);

}  // namespace plantdet
