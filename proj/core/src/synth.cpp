// SPDX-License-Identifier: Apache-2.0
#include "plantdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "plantdet/image.hpp"
#include "plantdet/rng.hpp"

namespace plantdet {

void SyntheticSceneConfig::validate() const {
  if (image_size < 32 || image_size % 32 != 0) {
    throw ConfigError("synth: image_size must be a positive multiple of 32");
  }
  if (classes < 1) throw ConfigError("synth: classes must be >= 1");
  if (min_leaves < 0 || max_leaves < min_leaves) throw ConfigError("synth: bad leaf range");
  if (occlusion < 0 || occlusion > 1) throw ConfigError("synth: occlusion outside [0,1]");
  if (min_radius_frac <= 0 || max_radius_frac < min_radius_frac || max_radius_frac > 0.45) {
    throw ConfigError("synth: bad radius range");
  }
}

std::vector<std::string> synth_class_names(int classes) {
  std::vector<std::string> names;
  char buf[32];
  for (int i = 0; i < classes; ++i) {
    std::snprintf(buf, sizeof(buf), "leaf_%02d", i);
    names.emplace_back(buf);
  }
  return names;
}

namespace {

struct Rgb {
  uint8_t r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  double c = v * s;
  double hp = h * 6.0;
  double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  double m = v - c;
  auto to8 = [](double t) { return static_cast<uint8_t>(std::clamp(t * 255.0 + 0.5, 0.0, 255.0)); };
  return {to8(r + m), to8(g + m), to8(b + m)};
}

struct LeafShape {
  int class_id;
  double cx, cy;        // pixel center
  double radius;        // base radius in pixels
  double aspect;        // ellipse minor/major
  double rotation;
  int lobes;            // 0 = ellipse
  Rgb color;
  // Rasterization results.
  std::vector<int32_t> pixels;  // linear indices when drawn alone
  int min_x = 1 << 30, min_y = 1 << 30, max_x = -1, max_y = -1;
};

// Per-class geometry bands: even ids are ellipses (eccentricity band),
// odd ids are lobed rosettes (lobe count band).
void class_geometry(int class_id, Rng& rng, LeafShape& leaf) {
  if (class_id % 2 == 0) {
    leaf.lobes = 0;
    double band = 0.35 + 0.18 * ((class_id / 2) % 4);
    leaf.aspect = std::clamp(band + rng.uniform(-0.05, 0.05), 0.2, 1.0);
  } else {
    leaf.lobes = 3 + (class_id / 2) % 4;
    leaf.aspect = 1.0;
  }
}

Rgb class_color(int class_id, int classes, Rng& rng) {
  double hue = (static_cast<double>(class_id) + 0.5) / classes;
  hue += rng.uniform(-0.015, 0.015);
  double sat = 0.62 + rng.uniform(-0.08, 0.08);
  double val = 0.62 + rng.uniform(-0.08, 0.08);
  return hsv_to_rgb(hue, sat, val);
}

// Radial extent of the shape at local polar angle phi.
double shape_radius(const LeafShape& leaf, double phi) {
  if (leaf.lobes == 0) return leaf.radius;
  return leaf.radius * (0.62 + 0.38 * std::cos(leaf.lobes * phi));
}

void rasterize(LeafShape& leaf, int size) {
  const double cr = std::cos(leaf.rotation), sr = std::sin(leaf.rotation);
  const int r_ceil = static_cast<int>(leaf.radius) + 2;
  const int x0 = std::max(0, static_cast<int>(leaf.cx) - r_ceil);
  const int x1 = std::min(size - 1, static_cast<int>(leaf.cx) + r_ceil);
  const int y0 = std::max(0, static_cast<int>(leaf.cy) - r_ceil);
  const int y1 = std::min(size - 1, static_cast<int>(leaf.cy) + r_ceil);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x + 0.5) - leaf.cx;
      const double dy = (y + 0.5) - leaf.cy;
      const double u = dx * cr + dy * sr;
      const double v = -dx * sr + dy * cr;
      bool inside;
      if (leaf.lobes == 0) {
        const double a = leaf.radius, b = leaf.radius * leaf.aspect;
        inside = (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
      } else {
        const double rho = std::sqrt(u * u + v * v);
        inside = rho <= shape_radius(leaf, std::atan2(v, u));
      }
      if (inside) {
        leaf.pixels.push_back(y * size + x);
        leaf.min_x = std::min(leaf.min_x, x);
        leaf.max_x = std::max(leaf.max_x, x);
        leaf.min_y = std::min(leaf.min_y, y);
        leaf.max_y = std::max(leaf.max_y, y);
      }
    }
  }
}

bool boxes_overlap(const LeafShape& a, const LeafShape& b) {
  return a.min_x <= b.max_x && b.min_x <= a.max_x && a.min_y <= b.max_y &&
         b.min_y <= a.max_y;
}

double overlap_area(const LeafShape& a, const LeafShape& b) {
  const double w = std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x) + 1;
  const double h = std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y) + 1;
  return std::max(0.0, w) * std::max(0.0, h);
}

}  // namespace

DatasetIndex generate_synthetic_dataset(const SyntheticSceneConfig& cfg, int n_images,
                                        const std::filesystem::path& out_dir) {
  cfg.validate();
  if (n_images < 1) throw ContractError("generate_synthetic_dataset: n must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  fs::create_directories(out_dir / "labels", ec);
  if (!fs::is_directory(out_dir / "images") || !fs::is_directory(out_dir / "labels")) {
    throw IoError("cannot create dataset directories under " + out_dir.string());
  }

  DatasetIndex index;
  index.class_names = synth_class_names(cfg.classes);
  {
    std::ofstream f(out_dir / "classes.txt");
    if (!f) throw IoError("cannot write classes.txt");
    for (const auto& n : index.class_names) f << n << "\n";
  }

  const int size = cfg.image_size;
  for (int img_i = 0; img_i < n_images; ++img_i) {
    Rng rng(seed_stream(cfg.seed, static_cast<uint64_t>(img_i)));

    // Soil-toned background: coarse brightness grid, bilinear, pixel grain.
    Image img;
    img.width = img.height = size;
    img.rgb.resize(static_cast<size_t>(size) * size * 3);
    constexpr int kGrid = 9;
    double grid[kGrid][kGrid];
    for (auto& row : grid)
      for (auto& v : row) v = rng.uniform(0.75, 1.25);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        double gx = static_cast<double>(x) / size * (kGrid - 1);
        double gy = static_cast<double>(y) / size * (kGrid - 1);
        int ix = std::min(static_cast<int>(gx), kGrid - 2);
        int iy = std::min(static_cast<int>(gy), kGrid - 2);
        double fx = gx - ix, fy = gy - iy;
        double v = (1 - fy) * ((1 - fx) * grid[iy][ix] + fx * grid[iy][ix + 1]) +
                   fy * ((1 - fx) * grid[iy + 1][ix] + fx * grid[iy + 1][ix + 1]);
        v += rng.uniform(-0.06, 0.06);
        img.at(x, y, 0) = static_cast<uint8_t>(std::clamp(96.0 * v, 0.0, 255.0));
        img.at(x, y, 1) = static_cast<uint8_t>(std::clamp(78.0 * v, 0.0, 255.0));
        img.at(x, y, 2) = static_cast<uint8_t>(std::clamp(58.0 * v, 0.0, 255.0));
      }
    }

    const int want = rng.uniform_int(cfg.min_leaves, cfg.max_leaves);
    std::vector<LeafShape> leaves;
    for (int li = 0; li < want; ++li) {
      LeafShape leaf;
      leaf.class_id = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.classes)));
      class_geometry(leaf.class_id, rng, leaf);
      leaf.color = class_color(leaf.class_id, cfg.classes, rng);
      bool placed = false;
      for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
        leaf.radius = rng.uniform(cfg.min_radius_frac, cfg.max_radius_frac) * size;
        leaf.rotation = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const double margin = leaf.radius + 2.0;
        leaf.cx = rng.uniform(margin, size - margin);
        leaf.cy = rng.uniform(margin, size - margin);
        leaf.pixels.clear();
        leaf.min_x = leaf.min_y = 1 << 30;
        leaf.max_x = leaf.max_y = -1;
        rasterize(leaf, size);
        if (leaf.pixels.empty()) continue;
        bool ok = true;
        for (const auto& other : leaves) {
          if (!boxes_overlap(leaf, other)) continue;
          if (cfg.occlusion <= 0.0) {
            ok = false;
            break;
          }
          const double area = static_cast<double>(
              std::min(leaf.pixels.size(), other.pixels.size()));
          if (overlap_area(leaf, other) > cfg.occlusion * area) {
            ok = false;
            break;
          }
        }
        placed = ok;
      }
      if (placed) leaves.push_back(std::move(leaf));
    }

    // Back-to-front overdraw with an ownership map.
    std::vector<int32_t> owner(static_cast<size_t>(size) * size, -1);
    for (size_t li = 0; li < leaves.size(); ++li) {
      const auto& leaf = leaves[li];
      const double inv_r = 1.0 / leaf.radius;
      for (int32_t p : leaf.pixels) {
        owner[p] = static_cast<int32_t>(li);
        const int x = p % size, y = p / size;
        const double dx = (x + 0.5) - leaf.cx, dy = (y + 0.5) - leaf.cy;
        const double shade =
            0.82 + 0.18 * std::max(0.0, 1.0 - std::sqrt(dx * dx + dy * dy) * inv_r);
        img.at(x, y, 0) = static_cast<uint8_t>(std::clamp(leaf.color.r * shade, 0.0, 255.0));
        img.at(x, y, 1) = static_cast<uint8_t>(std::clamp(leaf.color.g * shade, 0.0, 255.0));
        img.at(x, y, 2) = static_cast<uint8_t>(std::clamp(leaf.color.b * shade, 0.0, 255.0));
      }
    }
    std::vector<int64_t> visible(leaves.size(), 0);
    for (int32_t o : owner) {
      if (o >= 0) ++visible[o];
    }

    std::vector<Annotation> annotations;
    for (size_t li = 0; li < leaves.size(); ++li) {
      const auto& leaf = leaves[li];
      const double frac = static_cast<double>(visible[li]) /
                          static_cast<double>(leaf.pixels.size());
      if (frac < 0.30) continue;
      Annotation ann;
      ann.class_id = leaf.class_id;
      ann.box.cx = (leaf.min_x + leaf.max_x + 1) / 2.0 / size;
      ann.box.cy = (leaf.min_y + leaf.max_y + 1) / 2.0 / size;
      ann.box.w = static_cast<double>(leaf.max_x - leaf.min_x + 1) / size;
      ann.box.h = static_cast<double>(leaf.max_y - leaf.min_y + 1) / size;
      annotations.push_back(ann);
    }

    char name[32];
    std::snprintf(name, sizeof(name), "%05d", img_i);
    const fs::path img_path = out_dir / "images" / (std::string(name) + ".ppm");
    const fs::path lbl_path = out_dir / "labels" / (std::string(name) + ".txt");
    write_ppm(img, img_path);
    {
      std::ofstream f(lbl_path);
      if (!f) throw IoError("cannot write " + lbl_path.string());
      f << write_yolo_label(annotations);
    }
    index.items.push_back(DatasetItem{img_path, lbl_path, Split::kTrain});
  }
  return index;
}

}  // namespace plantdet
