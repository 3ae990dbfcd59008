// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/annotate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace planerf {

namespace {

int max_channel_dist(const std::array<uint8_t, 3>& a, const std::array<uint8_t, 3>& b) {
  int d = 0;
  for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(int(a[c]) - int(b[c])));
  return d;
}

}  // namespace

void InstancePalette::validate() const {
  if (entries.empty()) throw std::invalid_argument("empty instance palette");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].instance_id < 1)
      throw std::invalid_argument("palette instance ids must be >= 1 (0 is background)");
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (entries[i].instance_id == entries[j].instance_id)
        throw std::invalid_argument("duplicate palette instance id " +
                                    std::to_string(entries[i].instance_id));
      if (max_channel_dist(entries[i].color, entries[j].color) < 60)
        throw std::invalid_argument("palette colors closer than 60 (max-channel): entries " +
                                    std::to_string(i) + " and " + std::to_string(j));
    }
  }
}

const PaletteEntry* InstancePalette::find(int instance_id) const {
  for (const PaletteEntry& e : entries)
    if (e.instance_id == instance_id) return &e;
  return nullptr;
}

InstancePalette InstancePalette::standard(int n) {
  // Pairwise max-channel distances all >= 60.
  static const std::array<uint8_t, 3> colors[8] = {
      {230, 40, 40},  {40, 230, 40},  {60, 60, 230},  {230, 230, 40},
      {230, 40, 230}, {40, 230, 230}, {245, 140, 30}, {140, 40, 140}};
  if (n < 1 || n > 8) throw std::invalid_argument("standard palette supports 1..8 instances");
  InstancePalette p;
  for (int i = 0; i < n; ++i) p.entries.push_back({i + 1, i + 1, colors[i]});
  p.validate();
  return p;
}

LabelImage quantize_mask(const Image& rgb, const InstancePalette& palette, double theta,
                         int tolerance) {
  palette.validate();
  if (rgb.channels != 3) throw std::invalid_argument("quantize_mask expects an RGB image");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must be in (0,1)");
  LabelImage out;
  out.width = rgb.width;
  out.height = rgb.height;
  out.labels.assign(rgb.pixel_count(), 0);
  for (std::size_t px = 0; px < rgb.pixel_count(); ++px) {
    std::array<uint8_t, 3> c;
    float maxch = 0.f;
    for (int ch = 0; ch < 3; ++ch) {
      const float v = rgb.data[px * 3 + ch];
      maxch = std::max(maxch, v);
      c[ch] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
    }
    if (maxch < theta) continue;
    int best = -1, best_d = tolerance + 1;
    for (const PaletteEntry& e : palette.entries) {
      const int d = max_channel_dist(c, e.color);
      if (d < best_d) {  // strict: ties keep the earlier palette entry
        best_d = d;
        best = e.instance_id;
      }
    }
    if (best >= 0 && best_d <= tolerance) out.labels[px] = best;
  }
  return out;
}

std::vector<Blob> connected_components(const LabelImage& labels) {
  std::vector<Blob> blobs;
  const int W = labels.width, H = labels.height;
  std::vector<uint8_t> seen(labels.labels.size(), 0);
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * W + c;
      const int id = labels.labels[idx];
      if (id == 0 || seen[idx]) continue;
      Blob blob;
      blob.instance_id = id;
      stack.clear();
      stack.emplace_back(r, c);
      seen[idx] = 1;
      while (!stack.empty()) {
        const auto [pr, pc] = stack.back();
        stack.pop_back();
        blob.pixels.emplace_back(pr, pc);
        const int nbr[4][2] = {{pr - 1, pc}, {pr + 1, pc}, {pr, pc - 1}, {pr, pc + 1}};
        for (const auto& nb : nbr) {
          if (nb[0] < 0 || nb[0] >= H || nb[1] < 0 || nb[1] >= W) continue;
          const std::size_t ni = static_cast<std::size_t>(nb[0]) * W + nb[1];
          if (seen[ni] || labels.labels[ni] != id) continue;
          seen[ni] = 1;
          stack.emplace_back(nb[0], nb[1]);
        }
      }
      std::sort(blob.pixels.begin(), blob.pixels.end());
      blobs.push_back(std::move(blob));
    }
  }
  return blobs;  // discovery order = first pixel in row-major scan
}

std::vector<BBoxAnnotation> blobs_to_boxes(const std::vector<Blob>& blobs,
                                           const InstancePalette& palette, int min_area) {
  if (min_area < 1) throw std::invalid_argument("min_area must be >= 1");
  std::vector<BBoxAnnotation> boxes;
  for (const Blob& blob : blobs) {
    if (static_cast<int>(blob.pixels.size()) < min_area) continue;
    const PaletteEntry* entry = palette.find(blob.instance_id);
    if (!entry)
      throw std::invalid_argument("blob instance id " + std::to_string(blob.instance_id) +
                                  " missing from palette");
    BBoxAnnotation box;
    box.instance_id = blob.instance_id;
    box.class_id = entry->class_id;
    box.y_min = box.y_max = blob.pixels[0].first;
    box.x_min = box.x_max = blob.pixels[0].second;
    for (const auto& [r, c] : blob.pixels) {
      box.y_min = std::min(box.y_min, r);
      box.y_max = std::max(box.y_max, r);
      box.x_min = std::min(box.x_min, c);
      box.x_max = std::max(box.x_max, c);
    }
    ++box.x_max;  // inclusive-exclusive
    ++box.y_max;
    box.area = static_cast<int>(blob.pixels.size());
    boxes.push_back(box);
  }
  return boxes;
}

}  // namespace planerf
