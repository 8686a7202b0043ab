// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "plantdet/annotations.hpp"

namespace plantdet {

enum class Split { kTrain, kVal, kTest };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct DatasetItem {
  std::filesystem::path image_path;
  std::filesystem::path label_path;
  Split split = Split::kTrain;
};

struct DatasetIndex {
  std::vector<std::string> class_names;
  std::vector<DatasetItem> items;

  std::vector<size_t> split_items(Split s) const;
  int nc() const { return static_cast<int>(class_names.size()); }
};

/// Scans dir/images/*.ppm with matching dir/labels/*.txt plus
/// dir/classes.txt. Every image must have exactly one label file
/// (an empty file marks a background image).
DatasetIndex index_dataset(const std::filesystem::path& dir);

/// 8:1:1 counts: train and val round 0.8n and 0.1n to nearest (ties to
/// even); test takes the remainder. Fewer than 3 items is a data error.
std::array<int64_t, 3> split_counts(int64_t n);

/// Seeded shuffle then 8:1:1 assignment; deterministic per seed.
void split_dataset(DatasetIndex& index, uint64_t seed);

/// All items into one split (the smoke-profile overfit setup).
void assign_all(DatasetIndex& index, Split s);

void write_manifest(const DatasetIndex& index, const std::filesystem::path& path);
DatasetIndex read_manifest(const std::filesystem::path& path);

std::vector<Annotation> load_annotations(const DatasetItem& item, int nc);

}  // namespace plantdet
