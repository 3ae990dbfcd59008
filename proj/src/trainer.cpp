// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "planerf/checkpoint.hpp"
#include "planerf/parallel.hpp"
#include "planerf/rng.hpp"

namespace planerf {

TrainState TrainState::create(const PlaneStackConfig& planes, DecoderConfig dec, uint64_t seed) {
  TrainState s;
  s.stack = PlaneStack::create(planes);
  dec.fused_dim = s.stack.fused_dim();
  s.decoder = DecoderParams::create(planes.mode, dec);
  const std::size_t n = total_param_count(s.stack, s.decoder);
  s.adam_m.assign(n, 0.0f);
  s.adam_v.assign(n, 0.0f);
  s.seed = seed;
  return s;
}

std::vector<ParamSpan> param_spans(PlaneStack& stack, DecoderParams& dec) {
  std::vector<ParamSpan> out;
  for (std::size_t s = 0; s < stack.scales.size(); ++s) {
    for (std::size_t p = 0; p < stack.scales[s].base.size(); ++p) {
      PlaneGrid& g = stack.scales[s].base[p];
      out.push_back({"planes.s" + std::to_string(s) + ".base." + axes_name(g.axes),
                     g.values.data(), g.values.size()});
    }
    for (std::size_t p = 0; p < stack.scales[s].dynamic.size(); ++p) {
      PlaneGrid& g = stack.scales[s].dynamic[p];
      out.push_back({"planes.s" + std::to_string(s) + ".dyn." + axes_name(g.axes),
                     g.values.data(), g.values.size()});
    }
  }
  auto add = [&out](const char* name, Linear& l) {
    if (l.empty()) return;
    out.push_back({std::string(name) + ".w", l.w.data(), l.w.size()});
    out.push_back({std::string(name) + ".b", l.b.data(), l.b.size()});
  };
  add("decoder.fusion1", dec.fusion1);
  add("decoder.fusion2", dec.fusion2);
  add("decoder.density1", dec.density1);
  add("decoder.density2", dec.density2);
  add("decoder.color1", dec.color1);
  add("decoder.color2", dec.color2);
  add("decoder.mask_head", dec.mask_head);
  return out;
}

std::vector<GradSpan> grad_spans(PlaneStackGrads& pg, DecoderGrads& dg) {
  std::vector<GradSpan> out;
  for (std::size_t s = 0; s < pg.base.size(); ++s) {
    for (auto& v : pg.base[s]) out.push_back({v.data(), v.size()});
    for (auto& v : pg.dynamic[s]) out.push_back({v.data(), v.size()});
  }
  auto add = [&out](LinearGrads& lg) {
    if (lg.w.empty()) return;
    out.push_back({lg.w.data(), lg.w.size()});
    out.push_back({lg.b.data(), lg.b.size()});
  };
  add(dg.fusion1);
  add(dg.fusion2);
  add(dg.density1);
  add(dg.density2);
  add(dg.color1);
  add(dg.color2);
  add(dg.mask_head);
  return out;
}

std::size_t total_param_count(const PlaneStack& stack, const DecoderParams& dec) {
  std::size_t n = stack.value_count();
  for (const Linear* l : {&dec.fusion1, &dec.fusion2, &dec.density1, &dec.density2, &dec.color1,
                          &dec.color2, &dec.mask_head})
    n += l->w.size() + l->b.size();
  return n;
}

namespace {

constexpr double kBceClamp = 1e-7;

double bce(double m, double y) {
  const double mc = std::clamp(m, kBceClamp, 1.0 - kBceClamp);
  return -(y * std::log(mc) + (1.0 - y) * std::log(1.0 - mc));
}

double bce_grad(double m, double y) {
  if (m <= kBceClamp || m >= 1.0 - kBceClamp) return 0.0;  // clamped region is flat
  return (m - y) / (m * (1.0 - m));
}

// Total-variation terms: mean squared difference of adjacent cells. Spatial
// planes contribute along both axes to tv_spatial; temporal planes along the
// time axis (v) only, to tv_temporal.
struct TvTotals {
  double spatial_sq = 0, temporal_sq = 0;
  std::size_t spatial_pairs = 0, temporal_pairs = 0;
};

void tv_forward_plane(const PlaneGrid& g, TvTotals& t) {
  const int D = g.feature_dim;
  const bool temporal = is_temporal(g.axes);
  double sq = 0.0;
  // along u
  if (!temporal) {
    for (int u = 0; u + 1 < g.res_u; ++u)
      for (int v = 0; v < g.res_v; ++v)
        for (int ch = 0; ch < D; ++ch) {
          const double d = static_cast<double>(g.values[g.value_index(u, v, ch)]) -
                           static_cast<double>(g.values[g.value_index(u + 1, v, ch)]);
          sq += d * d;
        }
  }
  // along v
  for (int u = 0; u < g.res_u; ++u)
    for (int v = 0; v + 1 < g.res_v; ++v)
      for (int ch = 0; ch < D; ++ch) {
        const double d = static_cast<double>(g.values[g.value_index(u, v, ch)]) -
                         static_cast<double>(g.values[g.value_index(u, v + 1, ch)]);
        sq += d * d;
      }
  const std::size_t pairs_v = static_cast<std::size_t>(g.res_u) * (g.res_v - 1) * D;
  if (temporal) {
    t.temporal_sq += sq;
    t.temporal_pairs += pairs_v;
  } else {
    t.spatial_sq += sq;
    t.spatial_pairs += pairs_v + static_cast<std::size_t>(g.res_u - 1) * g.res_v * D;
  }
}

void tv_backward_plane(const PlaneGrid& g, double scale_spatial, double scale_temporal,
                       std::vector<double>& grads) {
  const int D = g.feature_dim;
  const bool temporal = is_temporal(g.axes);
  const double scale = temporal ? scale_temporal : scale_spatial;
  if (scale == 0.0) return;
  if (!temporal) {
    for (int u = 0; u + 1 < g.res_u; ++u)
      for (int v = 0; v < g.res_v; ++v)
        for (int ch = 0; ch < D; ++ch) {
          const std::size_t a = g.value_index(u, v, ch), b = g.value_index(u + 1, v, ch);
          const double d = static_cast<double>(g.values[a]) - static_cast<double>(g.values[b]);
          grads[a] += scale * 2.0 * d;
          grads[b] -= scale * 2.0 * d;
        }
  }
  for (int u = 0; u < g.res_u; ++u)
    for (int v = 0; v + 1 < g.res_v; ++v)
      for (int ch = 0; ch < D; ++ch) {
        const std::size_t a = g.value_index(u, v, ch), b = g.value_index(u, v + 1, ch);
        const double d = static_cast<double>(g.values[a]) - static_cast<double>(g.values[b]);
        grads[a] += scale * 2.0 * d;
        grads[b] -= scale * 2.0 * d;
      }
}

struct BatchPartial {
  double ph_sq = 0, bce_sum = 0, cos_sum = 0;
};

void check_loss_config(const TrainState& state, const LossWeights& w) {
  if (state.stack.mode() != FieldMode::Extended && (w.mask_bce > 0.0 || w.cosine_sep > 0.0))
    throw std::invalid_argument(
        "mask/cosine losses require extended mode; set their weights to 0 for this mode");
}

// Forward (+ optional backward) over one pixel batch. Gradients are of the
// weighted total loss. Parallel chunks accumulate into private buffers,
// reduced in chunk order so results are deterministic for a fixed thread
// count (and bit-stable at threads = 1).
LossBreakdown run_batch(const TrainState& state, const PixelBatch& batch,
                        const LossWeights& weights, const SceneBounds& bounds, bool routing,
                        PlaneStackGrads* pg, DecoderGrads* dg, int threads) {
  if (batch.pixels.empty()) throw std::invalid_argument("empty pixel batch");
  if (batch.samples_per_ray < 1) throw std::invalid_argument("samples_per_ray must be >= 1");
  check_loss_config(state, weights);
  const bool ext = state.stack.mode() == FieldMode::Extended;
  const bool with_grads = pg != nullptr;
  const std::size_t B = batch.pixels.size();
  const int n = batch.samples_per_ray;
  const int DS = state.stack.fused_dim();
  const bool route = routing && ext;
  const bool want_cos = ext;
  const double cos_upstream = weights.cosine_sep / (static_cast<double>(B) * n);

  const int n_chunks = threads <= 1 ? 1 : std::min<int>(threads, static_cast<int>(B));
  std::vector<BatchPartial> partials(n_chunks);
  std::vector<PlaneStackGrads> pg_local;
  std::vector<DecoderGrads> dg_local;
  if (with_grads && n_chunks > 1) {
    pg_local.reserve(n_chunks - 1);
    dg_local.reserve(n_chunks - 1);
    for (int c = 1; c < n_chunks; ++c) {
      pg_local.push_back(PlaneStackGrads::zeros_like(state.stack));
      dg_local.push_back(DecoderGrads::zeros_like(state.decoder));
    }
  }

  parallel_chunks(B, threads, [&](std::size_t begin, std::size_t end, int chunk) {
    PlaneStackGrads* my_pg = nullptr;
    DecoderGrads* my_dg = nullptr;
    if (with_grads) {
      my_pg = chunk == 0 ? pg : &pg_local[chunk - 1];
      my_dg = chunk == 0 ? dg : &dg_local[chunk - 1];
    }
    BatchPartial& part = partials[chunk];
    std::vector<FieldEvalCache> fcaches(n);
    std::vector<DecodeCache> dcaches(n);
    std::vector<uint8_t> usable(n);
    CompositeCache comp;
    std::vector<double> sigmas(n), masks(n), g_sigmas(n), g_masks(n);
    std::vector<std::array<double, 3>> rgbs(n), g_rgbs(n);
    std::vector<double> g_f(DS), g_fs(DS), g_fd(DS);

    for (std::size_t px = begin; px < end; ++px) {
      const BatchPixel& pixel = batch.pixels[px];
      if (pixel.dynamic_flag != 0 && pixel.dynamic_flag != 1)
        throw std::invalid_argument("dynamic_flag must be 0 or 1");
      RenderOutput out;
      RaySamples samples;
      if (pixel.ray.empty()) {
        out.rgb = batch.background;
      } else {
        samples = sample_along_ray(pixel.ray, n, batch.stratified, pixel.sample_seed);
        const auto dir_enc = encode_direction(pixel.ray.direction);
        std::array<double, 4> q;
        for (int i = 0; i < n; ++i) {
          usable[i] = try_normalize(samples.positions[i], pixel.ray.timestamp, bounds, q) ? 1 : 0;
          if (!usable[i]) {  // vacuum sample
            sigmas[i] = 0.0;
            rgbs[i] = {0, 0, 0};
            masks[i] = 0.0;
            continue;
          }
          eval_field(state.stack, q, fcaches[i]);
          if (ext)
            decode_forward(state.decoder, nullptr, fcaches[i].f_s.data(), fcaches[i].f_d.data(),
                           &fcaches[i].mask_logits, dir_enc, dcaches[i]);
          else
            decode_forward(state.decoder, fcaches[i].f.data(), nullptr, nullptr, nullptr, dir_enc,
                           dcaches[i]);
          sigmas[i] = dcaches[i].sigma;
          rgbs[i] = dcaches[i].rgb;
          masks[i] = dcaches[i].mask;
          if (want_cos) part.cos_sum += cosine_separation_term(state.stack, fcaches[i]);
        }
        composite_cached(sigmas, rgbs, masks, samples, batch.background, comp);
        out = comp.out;
      }

      for (int c = 0; c < 3; ++c) {
        const double e = out.rgb[c] - pixel.target[c];
        part.ph_sq += e * e;
      }
      if (ext) part.bce_sum += bce(out.mask, pixel.dynamic_flag);

      if (!with_grads || pixel.ray.empty()) continue;

      std::array<double, 3> u_rgb;
      for (int c = 0; c < 3; ++c)
        u_rgb[c] = weights.photometric * 2.0 * (out.rgb[c] - pixel.target[c]) / (3.0 * B);
      const double u_mask =
          ext && weights.mask_bce > 0.0
              ? weights.mask_bce * bce_grad(out.mask, pixel.dynamic_flag) / B
              : 0.0;
      std::fill(g_sigmas.begin(), g_sigmas.end(), 0.0);
      std::fill(g_masks.begin(), g_masks.end(), 0.0);
      std::fill(g_rgbs.begin(), g_rgbs.end(), std::array<double, 3>{0, 0, 0});
      composite_backward(sigmas, rgbs, masks, samples, batch.background, comp, u_rgb, 0.0,
                         u_mask, 0.0, g_sigmas, g_rgbs, g_masks);

      const bool scatter_base = !(route && pixel.dynamic_flag == 1);
      const bool scatter_dyn = !(route && pixel.dynamic_flag == 0);
      for (int i = 0; i < n; ++i) {
        if (!usable[i]) continue;
        if (want_cos && weights.cosine_sep > 0.0)
          cosine_separation_backward(state.stack, fcaches[i], cos_upstream);
        std::array<double, 3> g_logits{0, 0, 0};
        if (ext) {
          std::fill(g_fs.begin(), g_fs.end(), 0.0);
          std::fill(g_fd.begin(), g_fd.end(), 0.0);
          decode_backward(state.decoder, dcaches[i], g_sigmas[i], g_rgbs[i], g_masks[i], *my_dg,
                          nullptr, g_fs.data(), g_fd.data(), &g_logits, nullptr);
          eval_field_backward(state.stack, fcaches[i], nullptr, g_fs.data(), g_fd.data(),
                              g_logits, scatter_base, scatter_dyn, *my_pg);
        } else {
          std::fill(g_f.begin(), g_f.end(), 0.0);
          decode_backward(state.decoder, dcaches[i], g_sigmas[i], g_rgbs[i], g_masks[i], *my_dg,
                          g_f.data(), nullptr, nullptr, nullptr, nullptr);
          eval_field_backward(state.stack, fcaches[i], g_f.data(), nullptr, nullptr, g_logits,
                              true, true, *my_pg);
        }
      }
    }
  });

  // chunk-ordered reduction keeps results reproducible for a fixed thread count
  BatchPartial total;
  for (const BatchPartial& p : partials) {
    total.ph_sq += p.ph_sq;
    total.bce_sum += p.bce_sum;
    total.cos_sum += p.cos_sum;
  }
  if (with_grads) {
    for (int c = 1; c < n_chunks; ++c) {
      pg->add(pg_local[c - 1]);
      dg->add(dg_local[c - 1]);
    }
  }

  LossBreakdown lb;
  lb.photometric = total.ph_sq / (3.0 * B);
  lb.mask_bce = ext ? total.bce_sum / B : 0.0;
  lb.cosine_sep = ext ? total.cos_sum / (static_cast<double>(B) * n) : 0.0;

  TvTotals tv;
  for (const ScaleLevel& lvl : state.stack.scales) {
    for (const PlaneGrid& g : lvl.base) tv_forward_plane(g, tv);
    for (const PlaneGrid& g : lvl.dynamic) tv_forward_plane(g, tv);
  }
  lb.tv_spatial = tv.spatial_pairs ? tv.spatial_sq / tv.spatial_pairs : 0.0;
  lb.tv_temporal = tv.temporal_pairs ? tv.temporal_sq / tv.temporal_pairs : 0.0;

  if (with_grads && (weights.tv_spatial > 0.0 || weights.tv_temporal > 0.0)) {
    const double ss = tv.spatial_pairs ? weights.tv_spatial / tv.spatial_pairs : 0.0;
    const double st = tv.temporal_pairs ? weights.tv_temporal / tv.temporal_pairs : 0.0;
    for (std::size_t s = 0; s < state.stack.scales.size(); ++s) {
      const ScaleLevel& lvl = state.stack.scales[s];
      for (std::size_t p = 0; p < lvl.base.size(); ++p)
        tv_backward_plane(lvl.base[p], ss, st, pg->base[s][p]);
      for (std::size_t p = 0; p < lvl.dynamic.size(); ++p)
        tv_backward_plane(lvl.dynamic[p], ss, st, pg->dynamic[s][p]);
    }
  }

  lb.total = weights.photometric * lb.photometric + weights.mask_bce * lb.mask_bce +
             weights.cosine_sep * lb.cosine_sep + weights.tv_spatial * lb.tv_spatial +
             weights.tv_temporal * lb.tv_temporal;
  return lb;
}

void check_finite(const LossBreakdown& lb, int64_t step) {
  const std::pair<const char*, double> terms[] = {
      {"photometric", lb.photometric}, {"mask_bce", lb.mask_bce},
      {"cosine_sep", lb.cosine_sep},   {"tv_spatial", lb.tv_spatial},
      {"tv_temporal", lb.tv_temporal}, {"total", lb.total}};
  for (const auto& [name, v] : terms)
    if (!std::isfinite(v))
      throw std::runtime_error("non-finite " + std::string(name) + " loss at step " +
                               std::to_string(step));
}

}  // namespace

LossBreakdown compute_losses(const TrainState& state, const PixelBatch& batch,
                             const LossWeights& weights, const SceneBounds& bounds,
                             int threads) {
  return run_batch(state, batch, weights, bounds, false, nullptr, nullptr, threads);
}

LossBreakdown train_step(TrainState& state, const PixelBatch& batch, const LossWeights& weights,
                         const SceneBounds& bounds, const StepSettings& settings) {
  PlaneStackGrads pg = PlaneStackGrads::zeros_like(state.stack);
  DecoderGrads dg = DecoderGrads::zeros_like(state.decoder);
  const LossBreakdown lb = run_batch(state, batch, weights, bounds, settings.routing, &pg, &dg,
                                     settings.threads);
  check_finite(lb, state.step);

  const auto pspans = param_spans(state.stack, state.decoder);
  const auto gspans = grad_spans(pg, dg);
  const int64_t t = state.step + 1;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
  std::size_t off = 0;
  for (std::size_t k = 0; k < pspans.size(); ++k) {
    float* p = pspans[k].data;
    const double* g = gspans[k].data;
    for (std::size_t i = 0; i < pspans[k].size; ++i) {
      const double gi = g[i];
      const double m = b1 * state.adam_m[off + i] + (1.0 - b1) * gi;
      const double v = b2 * state.adam_v[off + i] + (1.0 - b2) * gi * gi;
      state.adam_m[off + i] = static_cast<float>(m);
      state.adam_v[off + i] = static_cast<float>(v);
      const double update = settings.lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
      p[i] = static_cast<float>(static_cast<double>(p[i]) - update);
    }
    off += pspans[k].size;
  }
  state.step = t;
  return lb;
}

double gradient_check(TrainState& state, const PixelBatch& batch, const LossWeights& weights,
                      const SceneBounds& bounds, double h, int subset_size, uint64_t seed) {
  PlaneStackGrads pg = PlaneStackGrads::zeros_like(state.stack);
  DecoderGrads dg = DecoderGrads::zeros_like(state.decoder);
  run_batch(state, batch, weights, bounds, false, &pg, &dg, 1);

  auto pspans = param_spans(state.stack, state.decoder);
  auto gspans = grad_spans(pg, dg);
  const std::size_t total = total_param_count(state.stack, state.decoder);
  Rng rng(mix_seed(seed, 0xfdc3ec4ULL));
  double max_rel = 0.0;
  for (int k = 0; k < subset_size; ++k) {
    std::size_t idx = rng.below(total);
    std::size_t span = 0, off = idx;
    while (off >= pspans[span].size) {
      off -= pspans[span].size;
      ++span;
    }
    float* slot = pspans[span].data + off;
    const float orig = *slot;
    const float plus = static_cast<float>(static_cast<double>(orig) + h);
    const float minus = static_cast<float>(static_cast<double>(orig) - h);
    *slot = plus;
    const double lp = run_batch(state, batch, weights, bounds, false, nullptr, nullptr, 1).total;
    *slot = minus;
    const double lm = run_batch(state, batch, weights, bounds, false, nullptr, nullptr, 1).total;
    *slot = orig;
    const double eff_h = static_cast<double>(plus) - static_cast<double>(minus);
    const double fd = (lp - lm) / eff_h;
    const double an = gspans[span].data[off];
    const double denom = std::max({std::abs(an), std::abs(fd), 1e-8});
    max_rel = std::max(max_rel, std::abs(fd - an) / denom);
  }
  return max_rel;
}

std::vector<std::vector<uint8_t>> dynamic_flag_maps(const SceneDataset& dataset) {
  std::vector<std::vector<uint8_t>> maps(dataset.frames.size());
  const std::size_t npx = static_cast<std::size_t>(dataset.width) * dataset.height;
  for (std::size_t f = 0; f < dataset.frames.size(); ++f) {
    maps[f].assign(npx, 0);
    for (const GtBox& b : dataset.frames[f].boxes)
      for (int r = std::max(0, static_cast<int>(std::floor(b.y_min)));
           r < std::min(dataset.height, static_cast<int>(std::ceil(b.y_max))); ++r)
        for (int c = std::max(0, static_cast<int>(std::floor(b.x_min)));
             c < std::min(dataset.width, static_cast<int>(std::ceil(b.x_max))); ++c)
          maps[f][static_cast<std::size_t>(r) * dataset.width + c] = 1;
  }
  return maps;
}

PixelBatch make_batch(const SceneDataset& dataset, const std::vector<int>& train_frames,
                      const std::vector<std::vector<uint8_t>>& dyn_flags, int count,
                      int64_t step, uint64_t seed, int samples_per_ray, bool stratified,
                      const std::array<double, 3>& background) {
  if (train_frames.empty()) throw std::invalid_argument("no training frames");
  PixelBatch batch;
  batch.samples_per_ray = samples_per_ray;
  batch.stratified = stratified;
  batch.background = background;
  batch.pixels.resize(count);
  Rng rng(mix_seed(mix_seed(seed, 0xba7c4ULL), static_cast<uint64_t>(step)));
  const std::size_t npx = static_cast<std::size_t>(dataset.width) * dataset.height;
  for (int k = 0; k < count; ++k) {
    const int fi = train_frames[rng.below(train_frames.size())];
    const std::size_t px = rng.below(npx);
    const int row = static_cast<int>(px / dataset.width);
    const int col = static_cast<int>(px % dataset.width);
    BatchPixel& bp = batch.pixels[k];
    bp.ray = ray_for_pixel(dataset.frames[fi].pose, row, col, dataset.bounds);
    bp.ray.timestamp = dataset.frames[fi].time;
    const Image& img = dataset.images[fi];
    for (int c = 0; c < 3; ++c) bp.target[c] = img.at(row, col, img.channels == 3 ? c : 0);
    bp.dynamic_flag = dyn_flags[fi][px];
    bp.sample_seed = mix_seed(mix_seed(seed, 0x5eedULL + static_cast<uint64_t>(step)),
                              static_cast<uint64_t>(k));
  }
  return batch;
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw std::invalid_argument("psnr: image dimensions differ");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    sq += d * d;
  }
  const double mse = sq / a.data.size();
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, -10.0 * std::log10(mse));
}

TrainResult train(TrainState& state, const SceneDataset& dataset, const LossWeights& weights,
                  const TrainSchedule& schedule) {
  if (dataset.frame_count() < 2) throw std::invalid_argument("dataset needs at least 2 frames");
  if (dataset.images.size() != dataset.frames.size())
    throw std::invalid_argument("dataset images not loaded");
  check_loss_config(state, weights);
  dataset.bounds.validate();
  state.bounds = dataset.bounds;
  state.background = schedule.background;
  if (state.stack.mode() == FieldMode::Extended && weights.mask_bce > 0.0) {
    bool any_boxes = false;
    for (const Frame& f : dataset.frames) any_boxes |= !f.boxes.empty();
    if (!any_boxes)
      throw std::invalid_argument(
          "extended-mode mask supervision requested but the dataset has no boxes");
  }

  std::vector<int> train_frames;
  for (int i = 0; i < dataset.frame_count(); ++i)
    if (std::find(schedule.eval_frames.begin(), schedule.eval_frames.end(), i) ==
        schedule.eval_frames.end())
      train_frames.push_back(i);
  for (int i : schedule.eval_frames)
    if (i < 0 || i >= dataset.frame_count())
      throw std::invalid_argument("eval frame index out of range: " + std::to_string(i));
  if (train_frames.empty()) throw std::invalid_argument("every frame held out; nothing to train");

  const auto flags = dynamic_flag_maps(dataset);
  std::ofstream log;
  if (!schedule.log_path.empty()) {
    log.open(schedule.log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot open training log: " + schedule.log_path);
  }

  auto run_eval = [&](TrainResult& result) {
    if (schedule.eval_frames.empty()) return;
    RenderSettings rs;
    rs.n_samples = schedule.eval_samples_per_ray;
    rs.stratified = false;
    rs.background = schedule.background;
    rs.threads = schedule.threads;
    double sum = 0.0;
    for (int fi : schedule.eval_frames) {
      const ImageSet set = render_image(state.stack, state.decoder, dataset.bounds,
                                        dataset.frames[fi].pose, dataset.frames[fi].time, rs);
      sum += psnr(set.rgb, dataset.images[fi]);
    }
    const double mean = sum / schedule.eval_frames.size();
    result.psnr_curve.push_back({state.step, mean});
    if (log) {
      nlohmann::json j{{"step", state.step}, {"eval_psnr", mean}};
      log << j.dump() << "\n" << std::flush;
    }
  };

  TrainResult result;
  StepSettings ss;
  ss.routing = schedule.routing;
  ss.threads = schedule.threads;
  const double lr_floor = schedule.lr * schedule.lr_final_factor;
  for (int it = 0; it < schedule.iterations; ++it) {
    const double progress = schedule.iterations > 1
                                ? static_cast<double>(it) / (schedule.iterations - 1)
                                : 0.0;
    ss.lr = lr_floor + (schedule.lr - lr_floor) * 0.5 * (1.0 + std::cos(M_PI * progress));
    const PixelBatch batch =
        make_batch(dataset, train_frames, flags, schedule.batch_size, state.step, state.seed,
                   schedule.samples_per_ray, schedule.stratified, schedule.background);
    result.last_loss = train_step(state, batch, weights, dataset.bounds, ss);
    if (log) {
      const LossBreakdown& lb = result.last_loss;
      nlohmann::json j{{"step", state.step},         {"photometric", lb.photometric},
                       {"mask_bce", lb.mask_bce},    {"cosine_sep", lb.cosine_sep},
                       {"tv_spatial", lb.tv_spatial}, {"tv_temporal", lb.tv_temporal},
                       {"total", lb.total},          {"lr", ss.lr}};
      log << j.dump() << "\n";
    }
    const bool last = it + 1 == schedule.iterations;
    if ((schedule.eval_interval > 0 && (it + 1) % schedule.eval_interval == 0) || last)
      run_eval(result);
    if (!schedule.checkpoint_path.empty() &&
        ((schedule.checkpoint_interval > 0 && (it + 1) % schedule.checkpoint_interval == 0) ||
         last))
      save_checkpoint(state, schedule.checkpoint_path);
  }
  return result;
}

}  // namespace planerf
