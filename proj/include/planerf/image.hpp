// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace planerf {

// Row-major float image, values in [0, 1]. channels is 1 or 3.
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.f)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  float& at(int row, int col, int ch = 0) {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  float at(int row, int col, int ch = 0) const {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  // Snaps every value to the nearest 8-bit level (round(v*255)/255), the
  // representation PNG files carry.
  void quantize8();
};

// 8-bit PNG read; gray and RGB(A) files load as 1 or 3 channels (alpha dropped).
Image read_png(const std::string& path);

// 8-bit PNG write (gray or RGB depending on channels).
void write_png8(const std::string& path, const Image& img);

// 16-bit grayscale PNG write; values clamped to [0, 1] then scaled to 65535.
void write_png16(const std::string& path, const Image& img, int channel = 0);

}  // namespace planerf
