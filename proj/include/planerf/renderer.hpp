// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "planerf/decoder.hpp"
#include "planerf/geometry.hpp"
#include "planerf/image.hpp"
#include "planerf/planes.hpp"

namespace planerf {

// Quadrature nodes along one ray.
struct RaySamples {
  std::vector<Eigen::Vector3d> positions;
  std::vector<double> ts;      // strictly increasing ray parameters
  std::vector<double> deltas;  // segment lengths, delta_n = far - t_n
  bool empty() const { return ts.empty(); }
};

struct RenderOutput {
  std::array<double, 3> rgb{0, 0, 0};
  double depth = 0.0;
  double acc = 0.0;
  double mask = 0.0;
};

// n uniform bins over [near, far]; deterministic mode takes bin centers,
// stratified mode jitters inside each bin with the seeded generator.
// An empty ray yields empty samples (the caller renders background).
RaySamples sample_along_ray(const Ray& ray, int n, bool stratified, uint64_t rng_seed);

// Per-ray quantities retained for the backward pass.
struct CompositeCache {
  std::vector<double> weights;  // w_i = T_i * alpha_i
  double t_final = 1.0;         // transmittance past the last sample
  RenderOutput out;
};

// Standard transmittance compositing; the mask channel composites like a
// color with zero background.
RenderOutput composite(const std::vector<double>& sigmas,
                       const std::vector<std::array<double, 3>>& rgbs,
                       const std::vector<double>& masks, const RaySamples& samples,
                       const std::array<double, 3>& background);

void composite_cached(const std::vector<double>& sigmas,
                      const std::vector<std::array<double, 3>>& rgbs,
                      const std::vector<double>& masks, const RaySamples& samples,
                      const std::array<double, 3>& background, CompositeCache& cache);

// Backward through composite_cached: upstream gradients on (rgb, acc, mask,
// depth) accumulate into g_sigmas / g_rgbs / g_masks (sized n, pre-zeroed by
// the caller or accumulated into).
void composite_backward(const std::vector<double>& sigmas,
                        const std::vector<std::array<double, 3>>& rgbs,
                        const std::vector<double>& masks, const RaySamples& samples,
                        const std::array<double, 3>& background, const CompositeCache& cache,
                        const std::array<double, 3>& g_rgb, double g_acc, double g_mask,
                        double g_depth, std::vector<double>& g_sigmas,
                        std::vector<std::array<double, 3>>& g_rgbs,
                        std::vector<double>& g_masks);

struct RenderSettings {
  int n_samples = 192;
  bool stratified = false;
  uint64_t seed = 0;
  std::array<double, 3> background{0, 0, 0};
  int threads = 1;
  double near_clip = 0.0;  // extra near offset along each ray
};

struct ImageSet {
  Image rgb;    // 3 channels
  Image depth;  // 1 channel, ray-parameter units
  Image acc;    // 1 channel
  Image mask;   // 1 channel
};

// Renders every pixel of the pose's image plane at time tau. Deterministic
// given the seed; per-pixel RNG streams make the result independent of the
// thread partitioning.
ImageSet render_image(const PlaneStack& stack, const DecoderParams& decoder,
                      const SceneBounds& bounds, const CameraPose& pose, double tau,
                      const RenderSettings& settings);

// Maps a world point into the normalized cube. Returns false when the point
// sits outside bounds beyond roundoff (treated as vacuum by callers).
bool try_normalize(const Eigen::Vector3d& p, double tau, const SceneBounds& bounds,
                   std::array<double, 4>& q);

}  // namespace planerf
