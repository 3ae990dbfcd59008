// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/decoder.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "planerf/rng.hpp"

namespace planerf {

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void linear_forward(const Linear& l, const double* x, double* y) {
  const float* w = l.w.data();
  for (int o = 0; o < l.out_dim; ++o) {
    double acc = l.b[o];
    const float* row = w + static_cast<std::size_t>(o) * l.in_dim;
    for (int i = 0; i < l.in_dim; ++i) acc += static_cast<double>(row[i]) * x[i];
    y[o] = acc;
  }
}

void linear_backward(const Linear& l, const double* x, const double* g_y, double* g_x,
                     LinearGrads& grads) {
  const float* w = l.w.data();
  for (int o = 0; o < l.out_dim; ++o) {
    const double g = g_y[o];
    grads.b[o] += g;
    const float* row = w + static_cast<std::size_t>(o) * l.in_dim;
    double* grow = grads.w.data() + static_cast<std::size_t>(o) * l.in_dim;
    if (g != 0.0) {
      for (int i = 0; i < l.in_dim; ++i) grow[i] += g * x[i];
      if (g_x)
        for (int i = 0; i < l.in_dim; ++i) g_x[i] += g * static_cast<double>(row[i]);
    }
  }
}

std::array<double, kDirEncodingDim> encode_direction(const Eigen::Vector3d& d) {
  std::array<double, kDirEncodingDim> e;
  e[0] = d.x();
  e[1] = d.y();
  e[2] = d.z();
  int idx = 3;
  for (int k = 0; k < 4; ++k) {
    const double freq = (1 << k) * M_PI;
    for (int c = 0; c < 3; ++c) e[idx++] = std::sin(freq * d[c]);
    for (int c = 0; c < 3; ++c) e[idx++] = std::cos(freq * d[c]);
  }
  return e;
}

void encode_direction_backward(const Eigen::Vector3d& d, const double* g_enc,
                               Eigen::Vector3d& g_d) {
  for (int c = 0; c < 3; ++c) g_d[c] += g_enc[c];
  int idx = 3;
  for (int k = 0; k < 4; ++k) {
    const double freq = (1 << k) * M_PI;
    for (int c = 0; c < 3; ++c) g_d[c] += g_enc[idx++] * freq * std::cos(freq * d[c]);
    for (int c = 0; c < 3; ++c) g_d[c] -= g_enc[idx++] * freq * std::sin(freq * d[c]);
  }
}

namespace {

Linear make_linear(int in_dim, int out_dim, Rng& rng, double bias = 0.0) {
  Linear l;
  l.in_dim = in_dim;
  l.out_dim = out_dim;
  l.w.resize(static_cast<std::size_t>(in_dim) * out_dim);
  l.b.assign(out_dim, static_cast<float>(bias));
  const double limit = std::sqrt(6.0 / in_dim);  // fan-in uniform
  for (float& v : l.w) v = static_cast<float>(rng.uniform(-limit, limit));
  return l;
}

void check_shape(const Linear& l, int in_dim, int out_dim, const char* name) {
  if (l.in_dim != in_dim || l.out_dim != out_dim ||
      l.w.size() != static_cast<std::size_t>(in_dim) * out_dim ||
      l.b.size() != static_cast<std::size_t>(out_dim))
    throw std::invalid_argument(std::string("decoder layer shape mismatch: ") + name);
  for (float v : l.w)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite weight: ") + name);
  for (float v : l.b)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite bias: ") + name);
}

}  // namespace

DecoderParams DecoderParams::create(FieldMode mode, const DecoderConfig& cfg) {
  if (cfg.fused_dim < 1) throw std::invalid_argument("fused_dim must be >= 1");
  if (cfg.hidden < 1) throw std::invalid_argument("hidden width must be >= 1");
  DecoderParams p;
  p.mode = mode;
  p.config = cfg;
  Rng rng(mix_seed(cfg.seed, 0x6465636f646572ULL));
  const int ds = cfg.fused_dim;
  if (mode == FieldMode::Extended) {
    p.fusion1 = make_linear(2 * ds + 3, cfg.hidden, rng);
    p.fusion2 = make_linear(cfg.hidden, ds, rng);
  }
  p.density1 = make_linear(ds, cfg.hidden, rng);
  p.density2 = make_linear(cfg.hidden, 1, rng, cfg.density_bias);
  p.color1 = make_linear(ds + kDirEncodingDim, cfg.hidden, rng);
  p.color2 = make_linear(cfg.hidden, 3, rng);
  if (mode == FieldMode::Extended) p.mask_head = make_linear(3, 1, rng);
  p.validate();
  return p;
}

void DecoderParams::validate() const {
  const int ds = config.fused_dim;
  const int h = config.hidden;
  if (mode == FieldMode::Extended) {
    check_shape(fusion1, 2 * ds + 3, h, "fusion1");
    check_shape(fusion2, h, ds, "fusion2");
    check_shape(mask_head, 3, 1, "mask_head");
  } else if (!fusion1.empty() || !mask_head.empty()) {
    throw std::invalid_argument("fusion/mask layers present outside extended mode");
  }
  check_shape(density1, ds, h, "density1");
  check_shape(density2, h, 1, "density2");
  check_shape(color1, ds + kDirEncodingDim, h, "color1");
  check_shape(color2, h, 3, "color2");
}

DecoderGrads DecoderGrads::zeros_like(const DecoderParams& p) {
  DecoderGrads g;
  auto init = [](LinearGrads& lg, const Linear& l) {
    lg.w.assign(l.w.size(), 0.0);
    lg.b.assign(l.b.size(), 0.0);
  };
  init(g.fusion1, p.fusion1);
  init(g.fusion2, p.fusion2);
  init(g.density1, p.density1);
  init(g.density2, p.density2);
  init(g.color1, p.color1);
  init(g.color2, p.color2);
  init(g.mask_head, p.mask_head);
  return g;
}

void DecoderGrads::clear() {
  for (LinearGrads* lg : {&fusion1, &fusion2, &density1, &density2, &color1, &color2, &mask_head}) {
    std::fill(lg->w.begin(), lg->w.end(), 0.0);
    std::fill(lg->b.begin(), lg->b.end(), 0.0);
  }
}

void DecoderGrads::add(const DecoderGrads& other) {
  auto acc = [](LinearGrads& a, const LinearGrads& b) {
    for (std::size_t i = 0; i < a.w.size(); ++i) a.w[i] += b.w[i];
    for (std::size_t i = 0; i < a.b.size(); ++i) a.b[i] += b.b[i];
  };
  acc(fusion1, other.fusion1);
  acc(fusion2, other.fusion2);
  acc(density1, other.density1);
  acc(density2, other.density2);
  acc(color1, other.color1);
  acc(color2, other.color2);
  acc(mask_head, other.mask_head);
}

void decode_forward(const DecoderParams& params, const double* f, const double* f_s,
                    const double* f_d, const std::array<double, 3>* mask_logits,
                    const std::array<double, kDirEncodingDim>& dir_enc, DecodeCache& cache) {
  const int ds = params.config.fused_dim;
  const int h = params.config.hidden;
  const bool ext = params.mode == FieldMode::Extended;

  cache.fused.resize(ds);
  if (ext) {
    cache.fusion_in.resize(2 * ds + 3);
    std::memcpy(cache.fusion_in.data(), f_s, ds * sizeof(double));
    std::memcpy(cache.fusion_in.data() + ds, f_d, ds * sizeof(double));
    for (int j = 0; j < 3; ++j) cache.fusion_in[2 * ds + j] = (*mask_logits)[j];
    cache.fusion_h.resize(h);
    linear_forward(params.fusion1, cache.fusion_in.data(), cache.fusion_h.data());
    for (double& v : cache.fusion_h) v = v > 0.0 ? v : 0.0;
    linear_forward(params.fusion2, cache.fusion_h.data(), cache.fused.data());
    cache.mask_in = *mask_logits;
    double pre;
    linear_forward(params.mask_head, cache.mask_in.data(), &pre);
    cache.mask_pre = pre;
    cache.mask = sigmoid(pre);
  } else {
    std::memcpy(cache.fused.data(), f, ds * sizeof(double));
    cache.mask_pre = 0.0;
    cache.mask = 0.0;
  }

  cache.density_h.resize(h);
  linear_forward(params.density1, cache.fused.data(), cache.density_h.data());
  for (double& v : cache.density_h) v = v > 0.0 ? v : 0.0;
  linear_forward(params.density2, cache.density_h.data(), &cache.density_pre);
  cache.sigma = softplus(cache.density_pre);

  cache.color_in.resize(ds + kDirEncodingDim);
  std::memcpy(cache.color_in.data(), cache.fused.data(), ds * sizeof(double));
  std::memcpy(cache.color_in.data() + ds, dir_enc.data(), kDirEncodingDim * sizeof(double));
  cache.color_h.resize(h);
  linear_forward(params.color1, cache.color_in.data(), cache.color_h.data());
  for (double& v : cache.color_h) v = v > 0.0 ? v : 0.0;
  linear_forward(params.color2, cache.color_h.data(), cache.color_pre.data());
  for (int c = 0; c < 3; ++c) cache.rgb[c] = sigmoid(cache.color_pre[c]);
}

void decode_backward(const DecoderParams& params, const DecodeCache& cache, double g_sigma,
                     const std::array<double, 3>& g_rgb, double g_mask, DecoderGrads& grads,
                     double* g_f, double* g_fs, double* g_fd,
                     std::array<double, 3>* g_mask_logits, double* g_dir_enc) {
  const int ds = params.config.fused_dim;
  const int h = params.config.hidden;
  const bool ext = params.mode == FieldMode::Extended;

  std::vector<double> g_fused(ds, 0.0);
  std::vector<double> g_hidden(h);

  // color head
  std::array<double, 3> g_cpre;
  for (int c = 0; c < 3; ++c) g_cpre[c] = g_rgb[c] * cache.rgb[c] * (1.0 - cache.rgb[c]);
  std::fill(g_hidden.begin(), g_hidden.end(), 0.0);
  linear_backward(params.color2, cache.color_h.data(), g_cpre.data(), g_hidden.data(),
                  grads.color2);
  for (int i = 0; i < h; ++i)
    if (cache.color_h[i] <= 0.0) g_hidden[i] = 0.0;
  std::vector<double> g_color_in(ds + kDirEncodingDim, 0.0);
  linear_backward(params.color1, cache.color_in.data(), g_hidden.data(), g_color_in.data(),
                  grads.color1);
  for (int i = 0; i < ds; ++i) g_fused[i] += g_color_in[i];
  if (g_dir_enc)
    for (int i = 0; i < kDirEncodingDim; ++i) g_dir_enc[i] += g_color_in[ds + i];

  // density head; d softplus(x)/dx = sigmoid(x)
  const double g_dpre = g_sigma * sigmoid(cache.density_pre);
  std::fill(g_hidden.begin(), g_hidden.end(), 0.0);
  linear_backward(params.density2, cache.density_h.data(), &g_dpre, g_hidden.data(),
                  grads.density2);
  for (int i = 0; i < h; ++i)
    if (cache.density_h[i] <= 0.0) g_hidden[i] = 0.0;
  linear_backward(params.density1, cache.fused.data(), g_hidden.data(), g_fused.data(),
                  grads.density1);

  if (!ext) {
    if (g_f)
      for (int i = 0; i < ds; ++i) g_f[i] += g_fused[i];
    return;
  }

  // mask head
  if (g_mask_logits && g_mask != 0.0) {
    const double g_mpre = g_mask * cache.mask * (1.0 - cache.mask);
    std::array<double, 3> g_min{0, 0, 0};
    linear_backward(params.mask_head, cache.mask_in.data(), &g_mpre, g_min.data(),
                    grads.mask_head);
    for (int j = 0; j < 3; ++j) (*g_mask_logits)[j] += g_min[j];
  }

  // fusion net
  std::fill(g_hidden.begin(), g_hidden.end(), 0.0);
  linear_backward(params.fusion2, cache.fusion_h.data(), g_fused.data(), g_hidden.data(),
                  grads.fusion2);
  for (int i = 0; i < h; ++i)
    if (cache.fusion_h[i] <= 0.0) g_hidden[i] = 0.0;
  std::vector<double> g_fin(2 * ds + 3, 0.0);
  linear_backward(params.fusion1, cache.fusion_in.data(), g_hidden.data(), g_fin.data(),
                  grads.fusion1);
  if (g_fs)
    for (int i = 0; i < ds; ++i) g_fs[i] += g_fin[i];
  if (g_fd)
    for (int i = 0; i < ds; ++i) g_fd[i] += g_fin[ds + i];
  if (g_mask_logits)
    for (int j = 0; j < 3; ++j) (*g_mask_logits)[j] += g_fin[2 * ds + j];
}

DecodedPoint decode(const FieldSample& sample, const Eigen::Vector3d& d,
                    const DecoderParams& params) {
  const bool ext = params.mode == FieldMode::Extended;
  if (ext != sample.extended)
    throw std::invalid_argument("field sample does not match decoder mode");
  DecodeCache cache;
  const auto enc = encode_direction(d);
  if (ext)
    decode_forward(params, nullptr, sample.f_s.data(), sample.f_d.data(), &sample.mask_logits,
                   enc, cache);
  else
    decode_forward(params, sample.f.data(), nullptr, nullptr, nullptr, enc, cache);
  DecodedPoint out;
  out.sigma = cache.sigma;
  out.rgb = cache.rgb;
  out.mask = cache.mask;
  return out;
}

}  // namespace planerf
