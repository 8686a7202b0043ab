// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "plantdet/train.hpp"

namespace plantdet {

enum class AblationGrid { kAttention, kCombination };

struct AblationRow {
  std::string name;
  int c3 = 0, st = 0;
  std::string attention;
  int64_t params = 0;
  double precision = 0, recall = 0, map50 = 0;
  uint64_t first_batch_hash = 0;
};

/// Trains and evaluates every arm of the grid with a shared seed and a
/// shared synthetic dataset, so all rows see identical batch order.
/// kAttention: baseline (4,0), baseline+MSA, baseline+W-MSA.
/// kCombination: (0,4), (1,3), (2,2), (3,1), (4,0).
std::vector<AblationRow> cmd_ablate(RunConfig base, AblationGrid grid,
                                    const std::filesystem::path& run_dir);

std::string format_ablation_table(const std::vector<AblationRow>& rows,
                                  AblationGrid grid);

}  // namespace plantdet
