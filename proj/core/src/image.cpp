// SPDX-License-Identifier: Apache-2.0
#include "plantdet/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace plantdet {

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open image " + path.string());
  std::string magic;
  f >> magic;
  if (magic != "P6") throw DataError(path.string() + ": not a binary PPM (P6)");
  auto next_int = [&]() -> int {
    // Skip whitespace and '#' comments between header fields.
    while (true) {
      int ch = f.peek();
      if (ch == '#') {
        std::string line;
        std::getline(f, line);
      } else if (std::isspace(ch)) {
        f.get();
      } else {
        break;
      }
    }
    int v = -1;
    f >> v;
    if (!f || v < 0) throw DataError(path.string() + ": malformed PPM header");
    return v;
  };
  Image img;
  img.width = next_int();
  img.height = next_int();
  int maxval = next_int();
  if (img.width <= 0 || img.height <= 0) throw DataError(path.string() + ": zero-sized image");
  if (maxval != 255) throw DataError(path.string() + ": only 8-bit PPM supported");
  f.get();  // single whitespace after maxval
  img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);
  f.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.rgb.size())) {
    throw DataError(path.string() + ": truncated PPM payload");
  }
  return img;
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  if (img.empty()) throw DataError("write_ppm: empty image");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write image " + path.string());
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.rgb.data()),
          static_cast<std::streamsize>(img.rgb.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

Tensor image_to_tensor(const Image& img) {
  if (img.empty()) throw DataError("image_to_tensor: empty image");
  auto t = Tensor::zeros({3, img.height, img.width});
  auto d = t.data();
  const int64_t area = static_cast<int64_t>(img.width) * img.height;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        d[c * area + y * img.width + x] =
            static_cast<float>(img.at(x, y, c)) / 255.0f;
  return t;
}

Image tensor_to_image(const Tensor& t) {
  if (t.dim() != 3 || t.size(0) != 3) throw DimensionError("tensor_to_image: want [3,H,W]");
  Image img;
  img.height = static_cast<int>(t.size(1));
  img.width = static_cast<int>(t.size(2));
  img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);
  auto d = t.data();
  const int64_t area = static_cast<int64_t>(img.width) * img.height;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        float v = d[c * area + y * img.width + x] * 255.0f;
        img.at(x, y, c) = static_cast<uint8_t>(std::clamp(v, 0.0f, 255.0f));
      }
  return img;
}

namespace {

// Bilinear sample with edge clamping; sx/sy are destination->source scales.
void bilinear_into(const Image& src, Image& dst, int out_w, int out_h,
                   int off_x, int off_y, double sx, double sy) {
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y0c = std::clamp(y0, 0, src.height - 1);
    int y1c = std::clamp(y0 + 1, 0, src.height - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x0c = std::clamp(x0, 0, src.width - 1);
      int x1c = std::clamp(x0 + 1, 0, src.width - 1);
      for (int c = 0; c < 3; ++c) {
        double v00 = src.at(x0c, y0c, c), v01 = src.at(x1c, y0c, c);
        double v10 = src.at(x0c, y1c, c), v11 = src.at(x1c, y1c, c);
        double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) +
                   wy * ((1 - wx) * v10 + wx * v11);
        dst.at(x + off_x, y + off_y, c) =
            static_cast<uint8_t>(std::clamp(v + 0.5, 0.0, 255.0));
      }
    }
  }
}

}  // namespace

std::pair<Image, BoxTransform> resize_image(const Image& img, int target,
                                            ResizeMode mode) {
  if (img.empty()) throw DataError("resize_image: zero-sized image");
  if (target <= 0 || target % 32 != 0) {
    throw ContractError("resize_image: target must be a positive multiple of 32");
  }
  Image out;
  out.width = out.height = target;
  out.rgb.assign(static_cast<size_t>(target) * target * 3, 114);

  BoxTransform tf;
  if (mode == ResizeMode::kStretch) {
    tf.sx = static_cast<double>(target) / img.width;
    tf.sy = static_cast<double>(target) / img.height;
    bilinear_into(img, out, target, target, 0, 0, 1.0 / tf.sx, 1.0 / tf.sy);
  } else {
    const double s = std::min(static_cast<double>(target) / img.width,
                              static_cast<double>(target) / img.height);
    const int new_w = std::max(1, static_cast<int>(std::round(img.width * s)));
    const int new_h = std::max(1, static_cast<int>(std::round(img.height * s)));
    const int off_x = (target - new_w) / 2;
    const int off_y = (target - new_h) / 2;
    tf.sx = static_cast<double>(new_w) / img.width;
    tf.sy = static_cast<double>(new_h) / img.height;
    tf.ox = off_x;
    tf.oy = off_y;
    bilinear_into(img, out, new_w, new_h, off_x, off_y, 1.0 / tf.sx, 1.0 / tf.sy);
  }
  return {std::move(out), tf};
}

void draw_box(Image& img, const Box& b, uint8_t r, uint8_t g, uint8_t bcol) {
  const int x1 = std::clamp(static_cast<int>(std::lround(b.x1)), 0, img.width - 1);
  const int y1 = std::clamp(static_cast<int>(std::lround(b.y1)), 0, img.height - 1);
  const int x2 = std::clamp(static_cast<int>(std::lround(b.x2)), 0, img.width - 1);
  const int y2 = std::clamp(static_cast<int>(std::lround(b.y2)), 0, img.height - 1);
  auto put = [&](int x, int y) {
    img.at(x, y, 0) = r;
    img.at(x, y, 1) = g;
    img.at(x, y, 2) = bcol;
  };
  for (int t = 0; t < 2; ++t) {
    for (int x = x1; x <= x2; ++x) {
      put(x, std::min(y1 + t, img.height - 1));
      put(x, std::max(y2 - t, 0));
    }
    for (int y = y1; y <= y2; ++y) {
      put(std::min(x1 + t, img.width - 1), y);
      put(std::max(x2 - t, 0), y);
    }
  }
}

}  // namespace plantdet
