// SPDX-License-Identifier: Apache-2.0
// Closed-form parameter counts derived from the layer shapes alone; the
// independent route against count_parameters / ParamStore sums.
#pragma once

#include <cstdint>

#include "plantdet/model.hpp"

namespace param_oracle {

inline int64_t cbs_params(int cin, int cout, int k) {
  return static_cast<int64_t>(cout) * cin * k * k + 2 * cout;
}

inline int64_t bottleneck_params(int c) {
  return cbs_params(c, c, 1) + cbs_params(c, c, 3);
}

inline int64_t c3_params(int cin, int cout, int n) {
  const int mid = cout / 2;
  return cbs_params(cin, mid, 1) + cbs_params(cin, mid, 1) +
         static_cast<int64_t>(n) * bottleneck_params(mid) +
         cbs_params(2 * mid, cout, 1);
}

inline int64_t sppf_params(int cin, int cout) {
  const int mid = cin / 2;
  return cbs_params(cin, mid, 1) + cbs_params(4 * mid, cout, 1);
}

inline int64_t st_block_params(int c, int mlp_ratio) {
  const int64_t ln = 2LL * c;
  const int64_t attn = static_cast<int64_t>(c) * 3 * c + 3 * c +
                       static_cast<int64_t>(c) * c + c;
  const int64_t mlp = static_cast<int64_t>(c) * c * mlp_ratio + c * mlp_ratio +
                      static_cast<int64_t>(c) * mlp_ratio * c + c;
  return 2 * (2 * ln + attn + mlp);
}

inline int64_t expected_params(const plantdet::BackboneConfig& cfg, int nc,
                               int na = 3) {
  const int w = cfg.base_width;
  int64_t total = cbs_params(3, w, 3);  // stem
  for (int stage = 1; stage <= 4; ++stage) {
    const int cin = cfg.stage_width(stage - 1);
    const int cout = cfg.stage_width(stage);
    total += cbs_params(cin, cout, 3);
    total += stage > cfg.c3_stages ? st_block_params(cout, cfg.mlp_ratio)
                                   : c3_params(cout, cout, cfg.depth);
  }
  const int w3 = cfg.stage_width(2), w4 = cfg.stage_width(3), w5 = cfg.stage_width(4);
  total += sppf_params(w5, w5);
  total += cbs_params(w5, w4, 1) + c3_params(2 * w4, w4, cfg.depth);
  total += cbs_params(w4, w3, 1) + c3_params(2 * w3, w3, cfg.depth);
  total += cbs_params(w3, w3, 3) + c3_params(2 * w3, w4, cfg.depth);
  total += cbs_params(w4, w4, 3) + c3_params(2 * w4, w5, cfg.depth);
  const int head_out = na * (5 + nc);
  total += static_cast<int64_t>(head_out) * w3 + head_out;
  total += static_cast<int64_t>(head_out) * w4 + head_out;
  total += static_cast<int64_t>(head_out) * w5 + head_out;
  return total;
}

}  // namespace param_oracle
