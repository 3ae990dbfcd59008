// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "planerf/geometry.hpp"

namespace planerf {

// Field variants. Stock fuses all six planes into one product; Extended
// splits them into a static spatial set and a dynamic set whose temporal
// planes carry an extra mask channel; SpatialOnly keeps just the three
// spatial planes and ignores time (the static-scene mode).
enum class FieldMode { Stock, Extended, SpatialOnly };

// Axis pair of a plane; u axis first. Coordinates are 0=x, 1=y, 2=z, 3=t.
enum class PlaneAxes { XY, XZ, YZ, XT, YT, ZT };

constexpr int axis_u(PlaneAxes a) {
  switch (a) {
    case PlaneAxes::XY: case PlaneAxes::XZ: case PlaneAxes::XT: return 0;
    case PlaneAxes::YZ: case PlaneAxes::YT: return 1;
    case PlaneAxes::ZT: return 2;
  }
  return 0;
}
constexpr int axis_v(PlaneAxes a) {
  switch (a) {
    case PlaneAxes::XY: return 1;
    case PlaneAxes::XZ: case PlaneAxes::YZ: return 2;
    case PlaneAxes::XT: case PlaneAxes::YT: case PlaneAxes::ZT: return 3;
  }
  return 0;
}
constexpr bool is_temporal(PlaneAxes a) { return axis_v(a) == 3; }
const char* axes_name(PlaneAxes a);

const char* to_string(FieldMode mode);
FieldMode field_mode_from_string(const std::string& s);  // accepts "stock",
// "extended", "spatial_only" / "spatial-only"; throws on anything else

// One 2D feature grid. values is res_u x res_v x feature_dim, v fastest
// within a row of u... laid out as ((u * res_v) + v) * feature_dim + ch.
struct PlaneGrid {
  PlaneAxes axes = PlaneAxes::XY;
  int res_u = 0, res_v = 0;
  int feature_dim = 0;
  std::vector<float> values;

  std::size_t value_index(int u, int v, int ch = 0) const {
    return (static_cast<std::size_t>(u) * res_v + v) * feature_dim + ch;
  }
};

struct PlaneStackConfig {
  FieldMode mode = FieldMode::Stock;
  int res_x = 128, res_y = 128, res_z = 64, res_t = 77;
  std::vector<int> multipliers = {1, 2, 4};  // applied to spatial axes only
  int feature_dim = 32;                      // D; temporal planes store D+1
  uint64_t seed = 0;
  // Planes entering products start near 1 so initial products are near 1;
  // the mask channel starts at 0.
  double init_lo = 0.9, init_hi = 1.1;
};

// Plane set for one resolution level. `base` is the full plane set in stock
// mode (xy,xz,yz,xt,yt,zt), the spatial set in spatial-only mode, and the
// static set C_s in extended mode; `dynamic` is C_d (extended mode only).
struct ScaleLevel {
  std::vector<PlaneGrid> base;
  std::vector<PlaneGrid> dynamic;
};

struct PlaneStack {
  PlaneStackConfig config;
  std::vector<ScaleLevel> scales;

  static PlaneStack create(const PlaneStackConfig& cfg);

  FieldMode mode() const { return config.mode; }
  int feature_dim() const { return config.feature_dim; }
  int num_scales() const { return static_cast<int>(scales.size()); }
  // Dimension of the cross-scale concatenated feature (D * num_scales).
  int fused_dim() const { return feature_dim() * num_scales(); }
  std::size_t value_count() const;
};

// Fused feature(s) at one 4D query point, plus the per-plane interpolated
// vectors retained for the cosine-separation loss.
struct FieldSample {
  std::vector<double> f;             // stock / spatial-only, dim D*S
  std::vector<double> f_s, f_d;      // extended, dim D*S each
  std::array<double, 3> mask_logits{0, 0, 0};
  bool extended = false;
  // [scale][plane][channel]; dynamic temporal planes keep all D+1 channels.
  std::vector<std::vector<std::vector<double>>> per_plane_base;
  std::vector<std::vector<std::vector<double>>> per_plane_dynamic;
};

// Maps a world point + timestamp into the unit 4-cube the planes live on.
// Throws std::domain_error if p lies outside bounds (boundary is allowed).
std::array<double, 4> normalize_point(const Eigen::Vector3d& p, double tau,
                                      const SceneBounds& bounds);

// Bilinear interpolation of one plane at q in [0,1]^4. The cell-center grid
// spans [0,1] with clamp-to-edge handling. Returns feature_dim values.
std::vector<double> interp_plane(const PlaneGrid& plane, const std::array<double, 4>& q);

// Single-set sampling: per scale, the Hadamard product over all planes in
// the set, concatenated across scales. Requires stock or spatial-only mode.
FieldSample sample_stock(const PlaneStack& stack, const std::array<double, 4>& q);

// Split sampling: f_s over the static spatial set, f_d over the dynamic set
// (temporal planes contribute their first D channels), mask logits = the
// (D+1)-th temporal channels averaged across scales. Extended mode only.
FieldSample sample_extended(const PlaneStack& stack, const std::array<double, 4>& q);

// Mean over samples of the summed |cosine similarity| between the
// static-set and dynamic-set spatial-plane vectors, per scale and axis pair.
// Vectors with norm product below 1e-12 contribute 0.
double cosine_separation_loss(std::span<const FieldSample> samples);

// ---- gradient-capable evaluation (used by the trainer hot path) ----

struct BilinearFootprint {
  std::size_t corner[4];  // flat value offsets of channel 0: (u0v0,u0v1,u1v0,u1v1)
  double weight[4];
};

BilinearFootprint plane_footprint(const PlaneGrid& plane, double qu, double qv);

// Gradient accumulator shaped like a PlaneStack's values.
struct PlaneStackGrads {
  std::vector<std::vector<std::vector<double>>> base, dynamic;  // [scale][plane][value]

  static PlaneStackGrads zeros_like(const PlaneStack& stack);
  void clear();
  void add(const PlaneStackGrads& other);
};

// Everything field evaluation at one point needs for its backward pass.
// Vectors are packed per scale then per plane; temporal dynamic planes
// occupy D+1 channels.
struct FieldEvalCache {
  std::vector<BilinearFootprint> fp_base, fp_dyn;
  std::vector<double> vec_base, vec_dyn;    // interpolated per-plane vectors
  std::vector<double> f;                    // stock/spatial fused, D*S
  std::vector<double> f_s, f_d;             // extended fused, D*S
  std::array<double, 3> mask_logits{0, 0, 0};
  // scratch for backward
  std::vector<double> g_vec_base, g_vec_dyn;
};

void eval_field(const PlaneStack& stack, const std::array<double, 4>& q, FieldEvalCache& cache);

// Backward through eval_field. g_f / (g_fs, g_fd, g_mask) are gradients on
// the fused outputs; scatter_base / scatter_dynamic implement gradient
// routing by dropping the fused-path contribution to one plane set.
// cache.g_vec_* must hold any extra per-plane-vector gradient contributions
// (the cosine loss path, which is never routed) before the call; the
// function adds the fused-path terms and scatters everything into grads.
void eval_field_backward(const PlaneStack& stack, const FieldEvalCache& cache,
                         const double* g_f, const double* g_fs, const double* g_fd,
                         const std::array<double, 3>& g_mask, bool scatter_base,
                         bool scatter_dynamic, PlaneStackGrads& grads);

// Separation term for a single cached sample (sum over scales and spatial pairs).
double cosine_separation_term(const PlaneStack& stack, const FieldEvalCache& cache);

// Adds d(term)/d(per-plane vectors) * upstream into cache.g_vec_base/_dyn.
void cosine_separation_backward(const PlaneStack& stack, FieldEvalCache& cache,
                                double upstream);

}  // namespace planerf
