// SPDX-License-Identifier: Apache-2.0
#include "plantdet/sgd.hpp"

namespace plantdet {

template <typename T>
void sgd_step(ParamStoreT<T>& params, SgdStateT<T>& state, double lr,
              double momentum, double weight_decay) {
  for (auto& [name, p] : params.params()) {
    if (!p.has_grad()) {
      throw ContractError("sgd_step: parameter " + name + " has no gradient");
    }
    auto& v = state.velocity[name];
    if (v.empty()) v.assign(static_cast<size_t>(p.numel()), T(0));
    auto pd = p.data();
    auto g = p.grad_view();
    const T m = static_cast<T>(momentum);
    const T wd = static_cast<T>(weight_decay);
    const T step = static_cast<T>(lr);
    for (size_t i = 0; i < v.size(); ++i) {
      v[i] = m * v[i] + g[i] + wd * pd[i];
      pd[i] -= step * v[i];
    }
  }
}

template void sgd_step(ParamStoreT<float>&, SgdStateT<float>&, double, double, double);
template void sgd_step(ParamStoreT<double>&, SgdStateT<double>&, double, double, double);

}  // namespace plantdet
