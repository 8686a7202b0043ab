// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "plantdet/boxes.hpp"
#include "plantdet/tensor.hpp"

namespace plantdet {

/// 8-bit interleaved RGB image; PPM (P6) is the native on-disk form.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;

  uint8_t& at(int x, int y, int c) { return rgb[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  uint8_t at(int x, int y, int c) const { return rgb[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  bool empty() const { return width == 0 || height == 0; }
};

Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& img, const std::filesystem::path& path);

/// [3,H,W] float tensor scaled to [0,1].
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t);

enum class ResizeMode { kStretch, kLetterbox };

/// Affine pixel map from original to resized coordinates:
/// x' = x * sx + ox, y' = y * sy + oy.
struct BoxTransform {
  double sx = 1, sy = 1, ox = 0, oy = 0;

  Box apply(const Box& b) const {
    return {b.x1 * sx + ox, b.y1 * sy + oy, b.x2 * sx + ox, b.y2 * sy + oy};
  }
  Box invert(const Box& b) const {
    return {(b.x1 - ox) / sx, (b.y1 - oy) / sy, (b.x2 - ox) / sx, (b.y2 - oy) / sy};
  }
};

/// Bilinear resize to target x target. Stretch scales each axis
/// independently; letterbox preserves aspect and pads with gray value 114.
/// Returns the resized image and the pixel-space box transform.
std::pair<Image, BoxTransform> resize_image(const Image& img, int target,
                                            ResizeMode mode);

/// Draws a 2px rectangle outline, clipped to the image.
void draw_box(Image& img, const Box& b, uint8_t r, uint8_t g, uint8_t bcol);

}  // namespace plantdet
