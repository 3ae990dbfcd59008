// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "planerf/image.hpp"

namespace planerf {

struct PaletteEntry {
  int instance_id = 0;  // >= 1; 0 is reserved for background
  int class_id = 0;
  std::array<uint8_t, 3> color{0, 0, 0};
};

// Instance colors for mask rendering and extraction. Colors must be pairwise
// separated by >= 60 in max-channel distance so compositing blur cannot move
// a pixel from one instance's color into another's tolerance ball.
struct InstancePalette {
  std::vector<PaletteEntry> entries;

  void validate() const;  // throws std::invalid_argument
  const PaletteEntry* find(int instance_id) const;
  // Built-in well-separated palette for up to `n` instances (n <= 8).
  static InstancePalette standard(int n);
};

// Per-pixel instance labels; 0 = background.
struct LabelImage {
  int width = 0, height = 0;
  std::vector<int> labels;

  int at(int row, int col) const { return labels[static_cast<std::size_t>(row) * width + col]; }
  int& at(int row, int col) { return labels[static_cast<std::size_t>(row) * width + col]; }
};

struct Blob {
  int instance_id = 0;
  std::vector<std::pair<int, int>> pixels;  // (row, col), scan order
};

struct BBoxAnnotation {
  int class_id = 0;
  int instance_id = 0;
  // Pixel box, inclusive-exclusive: x in [x_min, x_max), y in [y_min, y_max).
  int x_min = 0, y_min = 0, x_max = 0, y_max = 0;
  int area = 0;  // blob pixel count
};

// Labels each pixel with the nearest palette color when the pixel's max
// channel reaches `theta` and the nearest color is within `tolerance`
// (max-channel metric on the 8-bit scale); everything else is background.
LabelImage quantize_mask(const Image& rgb, const InstancePalette& palette, double theta = 0.3,
                         int tolerance = 80);

// 4-connected components per label value, ordered by first pixel in row-major
// scan order (top-most, then left-most).
std::vector<Blob> connected_components(const LabelImage& labels);

// Tight boxes around blobs with at least min_area pixels; class ids resolved
// through the palette.
std::vector<BBoxAnnotation> blobs_to_boxes(const std::vector<Blob>& blobs,
                                           const InstancePalette& palette, int min_area = 4);

}  // namespace planerf
