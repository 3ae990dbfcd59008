// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/renderer.hpp"

#include <cmath>
#include <stdexcept>

#include "planerf/parallel.hpp"
#include "planerf/rng.hpp"

namespace planerf {

RaySamples sample_along_ray(const Ray& ray, int n, bool stratified, uint64_t rng_seed) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  RaySamples s;
  if (ray.empty()) return s;
  const double span = ray.far - ray.near;
  const double h = span / n;
  s.ts.resize(n);
  if (stratified) {
    Rng rng(rng_seed);
    for (int i = 0; i < n; ++i) s.ts[i] = ray.near + (i + rng.uniform()) * h;
  } else {
    for (int i = 0; i < n; ++i) s.ts[i] = ray.near + (i + 0.5) * h;
  }
  s.deltas.resize(n);
  for (int i = 0; i + 1 < n; ++i) s.deltas[i] = s.ts[i + 1] - s.ts[i];
  s.deltas[n - 1] = ray.far - s.ts[n - 1];
  s.positions.resize(n);
  for (int i = 0; i < n; ++i) s.positions[i] = ray.origin + s.ts[i] * ray.direction;
  return s;
}

void composite_cached(const std::vector<double>& sigmas,
                      const std::vector<std::array<double, 3>>& rgbs,
                      const std::vector<double>& masks, const RaySamples& samples,
                      const std::array<double, 3>& background, CompositeCache& cache) {
  const std::size_t n = sigmas.size();
  if (rgbs.size() != n || masks.size() != n || samples.ts.size() != n ||
      samples.deltas.size() != n)
    throw std::invalid_argument("composite inputs must have equal lengths");
  cache.weights.assign(n, 0.0);
  RenderOutput& out = cache.out;
  out = RenderOutput{};
  double T = 1.0;
  double depth_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sigmas[i] < 0.0) throw std::invalid_argument("negative density in composite");
    const double alpha = 1.0 - std::exp(-sigmas[i] * samples.deltas[i]);
    const double w = T * alpha;
    cache.weights[i] = w;
    for (int c = 0; c < 3; ++c) out.rgb[c] += w * rgbs[i][c];
    out.mask += w * masks[i];
    out.acc += w;
    depth_sum += w * samples.ts[i];
    T *= 1.0 - alpha;
  }
  cache.t_final = T;
  for (int c = 0; c < 3; ++c) out.rgb[c] += T * background[c];
  out.depth = depth_sum / std::max(out.acc, 1e-6);
}

RenderOutput composite(const std::vector<double>& sigmas,
                       const std::vector<std::array<double, 3>>& rgbs,
                       const std::vector<double>& masks, const RaySamples& samples,
                       const std::array<double, 3>& background) {
  CompositeCache cache;
  composite_cached(sigmas, rgbs, masks, samples, background, cache);
  return cache.out;
}

void composite_backward(const std::vector<double>& sigmas,
                        const std::vector<std::array<double, 3>>& rgbs,
                        const std::vector<double>& masks, const RaySamples& samples,
                        const std::array<double, 3>& background, const CompositeCache& cache,
                        const std::array<double, 3>& g_rgb, double g_acc, double g_mask,
                        double g_depth, std::vector<double>& g_sigmas,
                        std::vector<std::array<double, 3>>& g_rgbs,
                        std::vector<double>& g_masks) {
  const std::size_t n = sigmas.size();
  const RenderOutput& out = cache.out;

  // depth = depth_sum / max(acc, eps): fold its gradient into the weight path.
  const double acc_eff = std::max(out.acc, 1e-6);
  const double g_depth_sum = g_depth / acc_eff;
  double g_acc_total = g_acc;
  if (out.acc > 1e-6) g_acc_total -= g_depth * out.depth / out.acc;

  // dL/dw_i = G_i; dL/dT_final = B (background exits through the ray).
  const double B = g_rgb[0] * background[0] + g_rgb[1] * background[1] + g_rgb[2] * background[2];

  // Suffix accumulator: S_k = sum_{i>k} w_i G_i.
  // dL/dsigma_k = delta_k * (T_{k+1} G_k - S_k - T_final * B) where
  // T_{k+1} = T_k (1 - alpha_k) is the transmittance just past sample k.
  double suffix = 0.0;
  double T_next = cache.t_final;  // walked backward: T past sample k
  for (std::size_t k = n; k-- > 0;) {
    const double w = cache.weights[k];
    const double G = g_rgb[0] * rgbs[k][0] + g_rgb[1] * rgbs[k][1] + g_rgb[2] * rgbs[k][2] +
                     g_acc_total + g_mask * masks[k] + g_depth_sum * samples.ts[k];
    for (int c = 0; c < 3; ++c) g_rgbs[k][c] += w * g_rgb[c];
    g_masks[k] += w * g_mask;
    g_sigmas[k] += samples.deltas[k] * (T_next * G - suffix - cache.t_final * B);
    suffix += w * G;
    // Recover T_{k} from T_{k+1}: T_k = T_{k+1} + w_k (since w_k = T_k - T_{k+1}).
    T_next += w;
  }
}

bool try_normalize(const Eigen::Vector3d& p, double tau, const SceneBounds& bounds,
                   std::array<double, 4>& q) {
  constexpr double tol = 1e-9;
  for (int i = 0; i < 3; ++i) {
    const double span = bounds.max[i] - bounds.min[i];
    double v = (p[i] - bounds.min[i]) / span;
    if (v < 0.0) {
      if (v < -tol) return false;
      v = 0.0;
    } else if (v > 1.0) {
      if (v > 1.0 + tol) return false;
      v = 1.0;
    }
    q[i] = v;
  }
  q[3] = tau;
  return true;
}

ImageSet render_image(const PlaneStack& stack, const DecoderParams& decoder,
                      const SceneBounds& bounds, const CameraPose& pose, double tau,
                      const RenderSettings& settings) {
  const int W = pose.intrinsics.width;
  const int H = pose.intrinsics.height;
  if (W < 1 || H < 1) throw std::invalid_argument("pose has a zero-size image");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau outside [0,1]");

  ImageSet set;
  set.rgb = Image(W, H, 3);
  set.depth = Image(W, H, 1);
  set.acc = Image(W, H, 1);
  set.mask = Image(W, H, 1);

  const std::size_t n_px = static_cast<std::size_t>(W) * H;
  parallel_chunks(n_px, settings.threads, [&](std::size_t begin, std::size_t end, int) {
    FieldEvalCache field_cache;
    DecodeCache dec_cache;
    CompositeCache comp_cache;
    std::vector<double> sigmas, masks;
    std::vector<std::array<double, 3>> rgbs;
    const bool ext = stack.mode() == FieldMode::Extended;
    for (std::size_t px = begin; px < end; ++px) {
      const int row = static_cast<int>(px / W);
      const int col = static_cast<int>(px % W);
      Ray ray = ray_for_pixel(pose, row, col, bounds);
      if (settings.near_clip > 0.0 && !ray.empty()) {
        ray.near = std::max(ray.near, settings.near_clip);
        if (!(ray.near < ray.far)) ray.near = ray.far = 0.0;
      }
      RenderOutput out;
      if (ray.empty()) {
        out.rgb = settings.background;
      } else {
        const RaySamples samples = sample_along_ray(ray, settings.n_samples, settings.stratified,
                                                    mix_seed(settings.seed, px));
        const std::size_t n = samples.ts.size();
        sigmas.assign(n, 0.0);
        masks.assign(n, 0.0);
        rgbs.assign(n, {0, 0, 0});
        const auto dir_enc = encode_direction(ray.direction);
        std::array<double, 4> q;
        for (std::size_t i = 0; i < n; ++i) {
          if (!try_normalize(samples.positions[i], tau, bounds, q)) continue;  // vacuum
          eval_field(stack, q, field_cache);
          if (ext)
            decode_forward(decoder, nullptr, field_cache.f_s.data(), field_cache.f_d.data(),
                           &field_cache.mask_logits, dir_enc, dec_cache);
          else
            decode_forward(decoder, field_cache.f.data(), nullptr, nullptr, nullptr, dir_enc,
                           dec_cache);
          sigmas[i] = dec_cache.sigma;
          rgbs[i] = dec_cache.rgb;
          masks[i] = dec_cache.mask;
        }
        composite_cached(sigmas, rgbs, masks, samples, settings.background, comp_cache);
        out = comp_cache.out;
      }
      for (int c = 0; c < 3; ++c) set.rgb.data[px * 3 + c] = static_cast<float>(out.rgb[c]);
      set.depth.data[px] = static_cast<float>(out.depth);
      set.acc.data[px] = static_cast<float>(out.acc);
      set.mask.data[px] = static_cast<float>(out.mask);
    }
  });
  return set;
}

}  // namespace planerf
