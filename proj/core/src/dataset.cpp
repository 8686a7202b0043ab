// SPDX-License-Identifier: Apache-2.0
#include "plantdet/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "plantdet/rng.hpp"

namespace plantdet {

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw DataError("unknown split name '" + name + "'");
}

std::vector<size_t> DatasetIndex::split_items(Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].split == s) out.push_back(i);
  }
  return out;
}

namespace {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

DatasetIndex index_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  DatasetIndex index;

  const fs::path classes_file = dir / "classes.txt";
  if (!fs::exists(classes_file)) {
    throw DataError("dataset " + dir.string() + ": missing classes.txt");
  }
  std::istringstream cls(read_text_file(classes_file));
  std::string line;
  while (std::getline(cls, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) index.class_names.push_back(line);
  }
  if (index.class_names.empty()) {
    throw DataError("dataset " + dir.string() + ": classes.txt is empty");
  }

  const fs::path images = dir / "images";
  const fs::path labels = dir / "labels";
  if (!fs::is_directory(images)) throw DataError("dataset: missing images/ under " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(images)) {
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& img : files) {
    fs::path label = labels / img.filename().replace_extension(".txt");
    if (!fs::exists(label)) {
      throw DataError("dataset: no label file for " + img.string());
    }
    index.items.push_back(DatasetItem{img, label, Split::kTrain});
  }
  if (index.items.empty()) throw DataError("dataset: no .ppm images under " + images.string());
  return index;
}

namespace {

// Nearest integer of num/10, ties to even.
int64_t round_tenth_half_even(int64_t num) {
  int64_t q = num / 10, r = num % 10;
  if (r > 5 || (r == 5 && q % 2 == 1)) return q + 1;
  return q;
}

}  // namespace

std::array<int64_t, 3> split_counts(int64_t n) {
  if (n < 3) throw DataError("split requires at least 3 items, got " + std::to_string(n));
  const int64_t train = round_tenth_half_even(8 * n);
  const int64_t val = round_tenth_half_even(n);
  const int64_t test = n - train - val;
  return {train, val, test};
}

void split_dataset(DatasetIndex& index, uint64_t seed) {
  const int64_t n = static_cast<int64_t>(index.items.size());
  auto counts = split_counts(n);
  std::vector<size_t> order(index.items.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  for (int64_t i = 0; i < n; ++i) {
    Split s = i < counts[0]                ? Split::kTrain
              : i < counts[0] + counts[1] ? Split::kVal
                                          : Split::kTest;
    index.items[order[i]].split = s;
  }
}

void assign_all(DatasetIndex& index, Split s) {
  for (auto& item : index.items) item.split = s;
}

void write_manifest(const DatasetIndex& index, const std::filesystem::path& path) {
  nlohmann::json j;
  j["classes"] = index.class_names;
  auto& items = j["items"] = nlohmann::json::array();
  for (const auto& item : index.items) {
    items.push_back({{"image", item.image_path.string()},
                     {"label", item.label_path.string()},
                     {"split", split_name(item.split)}});
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write manifest " + path.string());
  f << j.dump(2) << "\n";
}

DatasetIndex read_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest " + path.string());
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  DatasetIndex index;
  try {
    index.class_names = j.at("classes").get<std::vector<std::string>>();
    for (const auto& item : j.at("items")) {
      index.items.push_back(DatasetItem{item.at("image").get<std::string>(),
                                        item.at("label").get<std::string>(),
                                        split_from_name(item.at("split").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  return index;
}

std::vector<Annotation> load_annotations(const DatasetItem& item, int nc) {
  try {
    return parse_yolo_label(read_text_file(item.label_path), nc);
  } catch (const DataError& e) {
    throw DataError(item.label_path.string() + ": " + e.what());
  }
}

}  // namespace plantdet
