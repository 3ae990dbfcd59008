// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "planerf/planes.hpp"

namespace planerf {

// Dense layer. Weights live in float32 (the checkpoint format) but all
// arithmetic runs in double so finite-difference checks hold at h = 1e-4.
struct Linear {
  int in_dim = 0, out_dim = 0;
  std::vector<float> w;  // row-major, out_dim x in_dim
  std::vector<float> b;

  bool empty() const { return w.empty(); }
};

struct LinearGrads {
  std::vector<double> w, b;
};

void linear_forward(const Linear& l, const double* x, double* y);
// Accumulates into g_x (may be null) and grads.
void linear_backward(const Linear& l, const double* x, const double* g_y, double* g_x,
                     LinearGrads& grads);

struct DecoderConfig {
  int fused_dim = 0;  // D * num_scales
  int hidden = 64;
  uint64_t seed = 0;
  // Raw density bias starts low so a fresh field renders near-empty space.
  double density_bias = -8.0;
};

constexpr int kDirEncodingDim = 27;  // 3 + 3*2*4 (four sin/cos frequencies)

// Direction encoding: concat(d, sin(2^k pi d), cos(2^k pi d)) for k = 0..3.
std::array<double, kDirEncodingDim> encode_direction(const Eigen::Vector3d& d);
// d(encoding)/d(d) applied to an upstream gradient; adds into g_d.
void encode_direction_backward(const Eigen::Vector3d& d, const double* g_enc,
                               Eigen::Vector3d& g_d);

struct DecoderParams {
  FieldMode mode = FieldMode::Stock;
  DecoderConfig config;
  Linear fusion1, fusion2;  // extended mode: (2*DS+3) -> H -> DS
  Linear density1, density2;  // DS -> H -> 1, softplus
  Linear color1, color2;      // DS+27 -> H -> 3, sigmoid
  Linear mask_head;           // extended mode: 3 -> 1, sigmoid

  static DecoderParams create(FieldMode mode, const DecoderConfig& cfg);
  void validate() const;  // throws std::invalid_argument on inconsistent shapes
};

struct DecoderGrads {
  LinearGrads fusion1, fusion2, density1, density2, color1, color2, mask_head;

  static DecoderGrads zeros_like(const DecoderParams& p);
  void clear();
  void add(const DecoderGrads& other);
};

// Intermediate activations kept for the backward pass. Inputs are copied in
// so the backward call is self-contained.
struct DecodeCache {
  std::vector<double> fusion_in, fusion_h;  // extended
  std::vector<double> fused;
  std::vector<double> density_h;
  double density_pre = 0.0, sigma = 0.0;
  std::vector<double> color_in, color_h;
  std::array<double, 3> color_pre{}, rgb{};
  std::array<double, 3> mask_in{};
  double mask_pre = 0.0, mask = 0.0;
};

// Forward pass. For extended mode pass f_s, f_d (each DS) and mask_logits;
// otherwise pass the fused feature through `f` and leave the rest null.
void decode_forward(const DecoderParams& params, const double* f, const double* f_s,
                    const double* f_d, const std::array<double, 3>* mask_logits,
                    const std::array<double, kDirEncodingDim>& dir_enc, DecodeCache& cache);

// Backward pass: upstream gradients on (sigma, rgb, mask) produce parameter
// gradients plus gradients on the fused inputs. Output pointers mirror the
// forward inputs; pass null for unused routes. g_dir_enc may be null.
void decode_backward(const DecoderParams& params, const DecodeCache& cache, double g_sigma,
                     const std::array<double, 3>& g_rgb, double g_mask, DecoderGrads& grads,
                     double* g_f, double* g_fs, double* g_fd,
                     std::array<double, 3>* g_mask_logits, double* g_dir_enc);

struct DecodedPoint {
  double sigma = 0.0;
  std::array<double, 3> rgb{};
  double mask = 0.0;
};

// Convenience wrapper over decode_forward for a FieldSample.
DecodedPoint decode(const FieldSample& sample, const Eigen::Vector3d& d,
                    const DecoderParams& params);

double softplus(double x);
double sigmoid(double x);

}  // namespace planerf
