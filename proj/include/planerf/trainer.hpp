// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "planerf/dataset.hpp"
#include "planerf/renderer.hpp"

namespace planerf {

struct LossWeights {
  double photometric = 1.0;
  double cosine_sep = 1e-3;
  double mask_bce = 1e-2;
  double tv_spatial = 2e-4;
  double tv_temporal = 1e-3;
};

struct LossBreakdown {
  double photometric = 0, mask_bce = 0, cosine_sep = 0, tv_spatial = 0, tv_temporal = 0;
  double total = 0;
};

struct BatchPixel {
  Ray ray;  // carries the frame timestamp
  std::array<double, 3> target{0, 0, 0};
  int dynamic_flag = 0;  // 1 when the pixel lies inside a ground-truth box
  uint64_t sample_seed = 0;
};

struct PixelBatch {
  std::vector<BatchPixel> pixels;
  int samples_per_ray = 128;
  bool stratified = false;
  std::array<double, 3> background{0, 0, 0};
};

struct TrainState {
  PlaneStack stack;
  DecoderParams decoder;
  std::vector<float> adam_m, adam_v;  // aligned with param_spans order
  int64_t step = 0;
  uint64_t seed = 0;
  // Normalization domain and compositing background the model was trained
  // with; persisted in checkpoints so rendering needs no scene manifest.
  SceneBounds bounds;
  std::array<double, 3> background{0, 0, 0};

  // fused_dim of `dec` is filled in from the stack configuration.
  static TrainState create(const PlaneStackConfig& planes, DecoderConfig dec, uint64_t seed);
};

// Flat views over every learnable float32 value, in the canonical order the
// checkpoint, Adam moments, and gradient buffers all share.
struct ParamSpan {
  std::string name;
  float* data = nullptr;
  std::size_t size = 0;
};
struct GradSpan {
  double* data = nullptr;
  std::size_t size = 0;
};

std::vector<ParamSpan> param_spans(PlaneStack& stack, DecoderParams& dec);
std::vector<GradSpan> grad_spans(PlaneStackGrads& pg, DecoderGrads& dg);
std::size_t total_param_count(const PlaneStack& stack, const DecoderParams& dec);

// Loss terms over one pixel batch. Cosine separation averages over all
// quadrature samples of the batch (pixels x samples_per_ray); out-of-bounds
// (vacuum) samples contribute zero but stay in the denominator.
LossBreakdown compute_losses(const TrainState& state, const PixelBatch& batch,
                             const LossWeights& weights, const SceneBounds& bounds,
                             int threads = 1);

struct StepSettings {
  double lr = 1e-3;
  bool routing = false;  // extended mode: route photometric/mask plane grads
  int threads = 1;
};

// One optimization step: reverse-mode gradients of the weighted total loss,
// optional gradient routing, then an Adam update (beta1 0.9, beta2 0.999,
// eps 1e-8). Throws std::runtime_error naming the term on non-finite loss.
LossBreakdown train_step(TrainState& state, const PixelBatch& batch, const LossWeights& weights,
                         const SceneBounds& bounds, const StepSettings& settings);

// Central finite differences over a seeded random parameter subset vs the
// analytic gradients. Runs with routing off (routed gradients intentionally
// disagree with finite differences of the unrouted loss). Returns the max
// relative error, denominator floored at 1e-8.
double gradient_check(TrainState& state, const PixelBatch& batch, const LossWeights& weights,
                      const SceneBounds& bounds, double h = 1e-4, int subset_size = 32,
                      uint64_t seed = 0);

struct TrainSchedule {
  int iterations = 2000;
  int batch_size = 1024;
  int samples_per_ray = 128;
  int eval_samples_per_ray = 192;
  bool stratified = true;
  double lr = 1e-3;
  double lr_final_factor = 0.1;  // cosine decay floor, fraction of lr
  int eval_interval = 500;       // 0 disables periodic eval
  int checkpoint_interval = 0;   // 0 = final checkpoint only (if path set)
  int threads = 1;
  bool routing = true;  // honored in extended mode
  std::array<double, 3> background{0, 0, 0};
  std::vector<int> eval_frames;     // dataset frame indices held out of training
  std::string log_path;             // JSONL training log ("" = no log)
  std::string checkpoint_path;      // where train() writes checkpoints ("" = none)
};

struct EvalPoint {
  int64_t step = 0;
  double psnr = 0;
};

struct TrainResult {
  std::vector<EvalPoint> psnr_curve;
  LossBreakdown last_loss;
};

// Full optimization loop: seeded pixel batches, cosine-decayed lr, periodic
// held-out evaluation, optional JSONL log and checkpoints.
TrainResult train(TrainState& state, const SceneDataset& dataset, const LossWeights& weights,
                  const TrainSchedule& schedule);

// 10*log10(1/MSE) over all channels, capped at 99 dB; images must match in
// size. Values are expected in [0,1].
double psnr(const Image& a, const Image& b);

// Uniformly samples `count` (frame, pixel) pairs from the training frames.
PixelBatch make_batch(const SceneDataset& dataset, const std::vector<int>& train_frames,
                      const std::vector<std::vector<uint8_t>>& dyn_flags, int count,
                      int64_t step, uint64_t seed, int samples_per_ray, bool stratified,
                      const std::array<double, 3>& background);

// Per-frame bitmap of pixels inside any ground-truth box.
std::vector<std::vector<uint8_t>> dynamic_flag_maps(const SceneDataset& dataset);

}  // namespace planerf
