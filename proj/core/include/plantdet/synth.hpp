// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "plantdet/dataset.hpp"

namespace plantdet {

/// Synthetic dense-leaf scenes: per-class shape family (ellipse band or
/// lobed rosette), per-class color band, occlusion via back-to-front
/// overdraw. A leaf is labeled only while at least 30% of its pixels stay
/// visible; labels of unoccluded leaves bound their pixels exactly.
struct SyntheticSceneConfig {
  int image_size = 640;  // square, divisible by 32
  int classes = 3;
  int min_leaves = 1;
  int max_leaves = 4;
  double occlusion = 0.0;  // 0 = placements may not overlap
  double min_radius_frac = 0.08;
  double max_radius_frac = 0.20;
  uint64_t seed = 0;

  void validate() const;
};

/// Writes images/NNNNN.ppm, labels/NNNNN.txt and classes.txt under out_dir;
/// byte-identical for a fixed (config, n) pair.
DatasetIndex generate_synthetic_dataset(const SyntheticSceneConfig& cfg, int n_images,
                                        const std::filesystem::path& out_dir);

/// Class names used by the generator: leaf_00, leaf_01, ...
std::vector<std::string> synth_class_names(int classes);

}  // namespace plantdet
