// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/planes.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "planerf/rng.hpp"

namespace planerf {

const char* axes_name(PlaneAxes a) {
  switch (a) {
    case PlaneAxes::XY: return "xy";
    case PlaneAxes::XZ: return "xz";
    case PlaneAxes::YZ: return "yz";
    case PlaneAxes::XT: return "xt";
    case PlaneAxes::YT: return "yt";
    case PlaneAxes::ZT: return "zt";
  }
  return "??";
}

const char* to_string(FieldMode mode) {
  switch (mode) {
    case FieldMode::Stock: return "stock";
    case FieldMode::Extended: return "extended";
    case FieldMode::SpatialOnly: return "spatial_only";
  }
  return "?";
}

FieldMode field_mode_from_string(const std::string& s) {
  if (s == "stock") return FieldMode::Stock;
  if (s == "extended") return FieldMode::Extended;
  if (s == "spatial_only" || s == "spatial-only") return FieldMode::SpatialOnly;
  throw std::invalid_argument("unknown field mode: " + s);
}

namespace {

constexpr PlaneAxes kSpatialAxes[3] = {PlaneAxes::XY, PlaneAxes::XZ, PlaneAxes::YZ};
constexpr PlaneAxes kAllAxes[6] = {PlaneAxes::XY, PlaneAxes::XZ, PlaneAxes::YZ,
                                   PlaneAxes::XT, PlaneAxes::YT, PlaneAxes::ZT};

int axis_resolution(const PlaneStackConfig& cfg, int axis, int mult) {
  switch (axis) {
    case 0: return cfg.res_x * mult;
    case 1: return cfg.res_y * mult;
    case 2: return cfg.res_z * mult;
    case 3: return cfg.res_t;  // time resolution is never multiplied
  }
  throw std::logic_error("bad axis");
}

PlaneGrid make_plane(const PlaneStackConfig& cfg, PlaneAxes axes, int mult, int dim, Rng& rng) {
  PlaneGrid g;
  g.axes = axes;
  g.res_u = axis_resolution(cfg, axis_u(axes), mult);
  g.res_v = axis_resolution(cfg, axis_v(axes), mult);
  g.feature_dim = dim;
  g.values.resize(static_cast<std::size_t>(g.res_u) * g.res_v * dim);
  const bool has_mask_channel = dim == cfg.feature_dim + 1;
  std::size_t idx = 0;
  for (int u = 0; u < g.res_u; ++u)
    for (int v = 0; v < g.res_v; ++v)
      for (int ch = 0; ch < dim; ++ch, ++idx) {
        if (has_mask_channel && ch == cfg.feature_dim)
          g.values[idx] = 0.0f;  // mask logit starts neutral
        else
          g.values[idx] = static_cast<float>(rng.uniform(cfg.init_lo, cfg.init_hi));
      }
  return g;
}

}  // namespace

PlaneStack PlaneStack::create(const PlaneStackConfig& cfg) {
  if (cfg.feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (cfg.multipliers.empty()) throw std::invalid_argument("need at least one scale multiplier");
  if (cfg.res_x < 2 || cfg.res_y < 2 || cfg.res_z < 2 || cfg.res_t < 2)
    throw std::invalid_argument("plane resolutions must be >= 2");
  for (int m : cfg.multipliers)
    if (m < 1) throw std::invalid_argument("scale multipliers must be >= 1");

  PlaneStack stack;
  stack.config = cfg;
  Rng rng(mix_seed(cfg.seed, 0x706c616e65735ULL));
  for (int m : cfg.multipliers) {
    ScaleLevel level;
    switch (cfg.mode) {
      case FieldMode::Stock:
        for (PlaneAxes a : kAllAxes)
          level.base.push_back(make_plane(cfg, a, m, cfg.feature_dim, rng));
        break;
      case FieldMode::SpatialOnly:
        for (PlaneAxes a : kSpatialAxes)
          level.base.push_back(make_plane(cfg, a, m, cfg.feature_dim, rng));
        break;
      case FieldMode::Extended:
        for (PlaneAxes a : kSpatialAxes)
          level.base.push_back(make_plane(cfg, a, m, cfg.feature_dim, rng));
        for (PlaneAxes a : kAllAxes) {
          const int dim = is_temporal(a) ? cfg.feature_dim + 1 : cfg.feature_dim;
          level.dynamic.push_back(make_plane(cfg, a, m, dim, rng));
        }
        break;
    }
    stack.scales.push_back(std::move(level));
  }
  return stack;
}

std::size_t PlaneStack::value_count() const {
  std::size_t n = 0;
  for (const ScaleLevel& lvl : scales) {
    for (const PlaneGrid& p : lvl.base) n += p.values.size();
    for (const PlaneGrid& p : lvl.dynamic) n += p.values.size();
  }
  return n;
}

std::array<double, 4> normalize_point(const Eigen::Vector3d& p, double tau,
                                      const SceneBounds& bounds) {
  for (int i = 0; i < 3; ++i)
    if (p[i] < bounds.min[i] || p[i] > bounds.max[i])
      throw std::domain_error("point outside scene bounds on axis " + std::to_string(i));
  if (!(tau >= 0.0 && tau <= 1.0))
    throw std::domain_error("timestamp outside [0,1]");
  std::array<double, 4> q;
  for (int i = 0; i < 3; ++i)
    q[i] = (p[i] - bounds.min[i]) / (bounds.max[i] - bounds.min[i]);
  q[3] = tau;
  return q;
}

BilinearFootprint plane_footprint(const PlaneGrid& plane, double qu, double qv) {
  // Cell-center convention: node i sits at (i + 0.5) / res, clamp-to-edge.
  auto locate = [](double q, int res, int& i0, int& i1, double& t) {
    double x = q * res - 0.5;
    if (x <= 0.0) { i0 = i1 = 0; t = 0.0; return; }
    if (x >= res - 1) { i0 = i1 = res - 1; t = 0.0; return; }
    i0 = static_cast<int>(std::floor(x));
    i1 = i0 + 1;
    t = x - i0;
  };
  int u0, u1, v0, v1;
  double tu, tv;
  locate(qu, plane.res_u, u0, u1, tu);
  locate(qv, plane.res_v, v0, v1, tv);
  BilinearFootprint fp;
  fp.corner[0] = plane.value_index(u0, v0);
  fp.corner[1] = plane.value_index(u0, v1);
  fp.corner[2] = plane.value_index(u1, v0);
  fp.corner[3] = plane.value_index(u1, v1);
  fp.weight[0] = (1.0 - tu) * (1.0 - tv);
  fp.weight[1] = (1.0 - tu) * tv;
  fp.weight[2] = tu * (1.0 - tv);
  fp.weight[3] = tu * tv;
  return fp;
}

namespace {

void check_unit_cube(const std::array<double, 4>& q) {
  for (int i = 0; i < 4; ++i)
    if (!(q[i] >= 0.0 && q[i] <= 1.0))
      throw std::domain_error("normalized query coordinate outside [0,1] on axis " +
                              std::to_string(i));
}

inline void gather(const PlaneGrid& plane, const BilinearFootprint& fp, double* out) {
  const float* v = plane.values.data();
  for (int ch = 0; ch < plane.feature_dim; ++ch) {
    out[ch] = fp.weight[0] * v[fp.corner[0] + ch] + fp.weight[1] * v[fp.corner[1] + ch] +
              fp.weight[2] * v[fp.corner[2] + ch] + fp.weight[3] * v[fp.corner[3] + ch];
  }
}

inline void scatter(const BilinearFootprint& fp, const double* g, int dim,
                    std::vector<double>& grads) {
  for (int ch = 0; ch < dim; ++ch) {
    const double gc = g[ch];
    if (gc == 0.0) continue;
    grads[fp.corner[0] + ch] += fp.weight[0] * gc;
    grads[fp.corner[1] + ch] += fp.weight[1] * gc;
    grads[fp.corner[2] + ch] += fp.weight[2] * gc;
    grads[fp.corner[3] + ch] += fp.weight[3] * gc;
  }
}

// d(prod_i v_i)/d(v_k) = prefix_k * suffix_k, accumulated per channel.
void hadamard_backward(const double* vecs, int n_planes, int stride, int dim,
                       const double* g_out, double* g_vecs) {
  double prefix[8], suffix[8];
  for (int ch = 0; ch < dim; ++ch) {
    prefix[0] = 1.0;
    for (int p = 1; p < n_planes; ++p) prefix[p] = prefix[p - 1] * vecs[(p - 1) * stride + ch];
    suffix[n_planes - 1] = 1.0;
    for (int p = n_planes - 2; p >= 0; --p) suffix[p] = suffix[p + 1] * vecs[(p + 1) * stride + ch];
    for (int p = 0; p < n_planes; ++p)
      g_vecs[p * stride + ch] += g_out[ch] * prefix[p] * suffix[p];
  }
}

}  // namespace

void eval_field(const PlaneStack& stack, const std::array<double, 4>& q, FieldEvalCache& cache) {
  check_unit_cube(q);
  const int D = stack.feature_dim();
  const int S = stack.num_scales();
  const int n_base = static_cast<int>(stack.scales[0].base.size());
  const bool ext = stack.mode() == FieldMode::Extended;
  const int dyn_stride = D + 1;

  cache.fp_base.resize(static_cast<std::size_t>(S) * n_base);
  cache.vec_base.resize(static_cast<std::size_t>(S) * n_base * D);
  if (ext) {
    cache.fp_dyn.resize(static_cast<std::size_t>(S) * 6);
    cache.vec_dyn.resize(static_cast<std::size_t>(S) * 6 * dyn_stride);
    cache.f_s.assign(static_cast<std::size_t>(S) * D, 1.0);
    cache.f_d.assign(static_cast<std::size_t>(S) * D, 1.0);
    cache.f.clear();
  } else {
    cache.f.assign(static_cast<std::size_t>(S) * D, 1.0);
    cache.f_s.clear();
    cache.f_d.clear();
    cache.fp_dyn.clear();
    cache.vec_dyn.clear();
  }
  cache.g_vec_base.assign(cache.vec_base.size(), 0.0);
  cache.g_vec_dyn.assign(cache.vec_dyn.size(), 0.0);
  cache.mask_logits = {0, 0, 0};

  for (int s = 0; s < S; ++s) {
    const ScaleLevel& lvl = stack.scales[s];
    double* fused = ext ? &cache.f_s[s * D] : &cache.f[s * D];
    for (int p = 0; p < n_base; ++p) {
      const PlaneGrid& plane = lvl.base[p];
      BilinearFootprint& fp = cache.fp_base[s * n_base + p];
      fp = plane_footprint(plane, q[axis_u(plane.axes)], q[axis_v(plane.axes)]);
      double* vec = &cache.vec_base[(static_cast<std::size_t>(s) * n_base + p) * D];
      gather(plane, fp, vec);
      for (int ch = 0; ch < D; ++ch) fused[ch] *= vec[ch];
    }
    if (!ext) continue;
    double* fused_d = &cache.f_d[s * D];
    for (int p = 0; p < 6; ++p) {
      const PlaneGrid& plane = lvl.dynamic[p];
      BilinearFootprint& fp = cache.fp_dyn[s * 6 + p];
      fp = plane_footprint(plane, q[axis_u(plane.axes)], q[axis_v(plane.axes)]);
      double* vec = &cache.vec_dyn[(static_cast<std::size_t>(s) * 6 + p) * dyn_stride];
      gather(plane, fp, vec);
      for (int ch = 0; ch < D; ++ch) fused_d[ch] *= vec[ch];
      if (is_temporal(plane.axes)) cache.mask_logits[p - 3] += vec[D];
    }
  }
  if (ext)
    for (int j = 0; j < 3; ++j) cache.mask_logits[j] /= S;
}

void eval_field_backward(const PlaneStack& stack, const FieldEvalCache& cache,
                         const double* g_f, const double* g_fs, const double* g_fd,
                         const std::array<double, 3>& g_mask, bool scatter_base,
                         bool scatter_dynamic, PlaneStackGrads& grads) {
  const int D = stack.feature_dim();
  const int S = stack.num_scales();
  const int n_base = static_cast<int>(stack.scales[0].base.size());
  const bool ext = stack.mode() == FieldMode::Extended;
  const int dyn_stride = D + 1;

  // g_vec buffers already hold the never-routed contributions (cosine path);
  // add the fused-path terms the routing flags allow, then scatter it all.
  auto& g_base = const_cast<std::vector<double>&>(cache.g_vec_base);
  auto& g_dyn = const_cast<std::vector<double>&>(cache.g_vec_dyn);

  for (int s = 0; s < S; ++s) {
    if (scatter_base) {
      const double* g_out = ext ? &g_fs[s * D] : &g_f[s * D];
      hadamard_backward(&cache.vec_base[static_cast<std::size_t>(s) * n_base * D], n_base, D, D,
                        g_out, &g_base[static_cast<std::size_t>(s) * n_base * D]);
    }
    if (ext && scatter_dynamic) {
      hadamard_backward(&cache.vec_dyn[static_cast<std::size_t>(s) * 6 * dyn_stride], 6,
                        dyn_stride, D, &g_fd[s * D],
                        &g_dyn[static_cast<std::size_t>(s) * 6 * dyn_stride]);
      for (int j = 0; j < 3; ++j)
        g_dyn[(static_cast<std::size_t>(s) * 6 + 3 + j) * dyn_stride + D] += g_mask[j] / S;
    }
  }

  for (int s = 0; s < S; ++s) {
    const ScaleLevel& lvl = stack.scales[s];
    for (int p = 0; p < n_base; ++p)
      scatter(cache.fp_base[s * n_base + p],
              &g_base[(static_cast<std::size_t>(s) * n_base + p) * D], D, grads.base[s][p]);
    for (int p = 0; p < static_cast<int>(lvl.dynamic.size()); ++p)
      scatter(cache.fp_dyn[s * 6 + p], &g_dyn[(static_cast<std::size_t>(s) * 6 + p) * dyn_stride],
              lvl.dynamic[p].feature_dim, grads.dynamic[s][p]);
  }
}

PlaneStackGrads PlaneStackGrads::zeros_like(const PlaneStack& stack) {
  PlaneStackGrads g;
  g.base.resize(stack.scales.size());
  g.dynamic.resize(stack.scales.size());
  for (std::size_t s = 0; s < stack.scales.size(); ++s) {
    for (const PlaneGrid& p : stack.scales[s].base)
      g.base[s].push_back(std::vector<double>(p.values.size(), 0.0));
    for (const PlaneGrid& p : stack.scales[s].dynamic)
      g.dynamic[s].push_back(std::vector<double>(p.values.size(), 0.0));
  }
  return g;
}

void PlaneStackGrads::clear() {
  for (auto& lvl : base)
    for (auto& p : lvl) std::fill(p.begin(), p.end(), 0.0);
  for (auto& lvl : dynamic)
    for (auto& p : lvl) std::fill(p.begin(), p.end(), 0.0);
}

void PlaneStackGrads::add(const PlaneStackGrads& other) {
  for (std::size_t s = 0; s < base.size(); ++s)
    for (std::size_t p = 0; p < base[s].size(); ++p)
      for (std::size_t i = 0; i < base[s][p].size(); ++i) base[s][p][i] += other.base[s][p][i];
  for (std::size_t s = 0; s < dynamic.size(); ++s)
    for (std::size_t p = 0; p < dynamic[s].size(); ++p)
      for (std::size_t i = 0; i < dynamic[s][p].size(); ++i)
        dynamic[s][p][i] += other.dynamic[s][p][i];
}

namespace {
constexpr double kCosNormGuard = 1e-12;
}

double cosine_separation_term(const PlaneStack& stack, const FieldEvalCache& cache) {
  if (stack.mode() != FieldMode::Extended)
    throw std::logic_error("cosine separation requires extended mode");
  const int D = stack.feature_dim();
  const int S = stack.num_scales();
  const int dyn_stride = D + 1;
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    for (int p = 0; p < 3; ++p) {  // spatial pairs xy,xz,yz
      const double* u = &cache.vec_base[(static_cast<std::size_t>(s) * 3 + p) * D];
      const double* v = &cache.vec_dyn[(static_cast<std::size_t>(s) * 6 + p) * dyn_stride];
      double dot = 0, nu = 0, nv = 0;
      for (int ch = 0; ch < D; ++ch) {
        dot += u[ch] * v[ch];
        nu += u[ch] * u[ch];
        nv += v[ch] * v[ch];
      }
      const double norm = std::sqrt(nu) * std::sqrt(nv);
      if (norm > kCosNormGuard) total += std::abs(dot / norm);
    }
  }
  return total;
}

void cosine_separation_backward(const PlaneStack& stack, FieldEvalCache& cache, double upstream) {
  const int D = stack.feature_dim();
  const int S = stack.num_scales();
  const int dyn_stride = D + 1;
  for (int s = 0; s < S; ++s) {
    for (int p = 0; p < 3; ++p) {
      const std::size_t ub = (static_cast<std::size_t>(s) * 3 + p) * D;
      const std::size_t vb = (static_cast<std::size_t>(s) * 6 + p) * dyn_stride;
      const double* u = &cache.vec_base[ub];
      const double* v = &cache.vec_dyn[vb];
      double dot = 0, nu2 = 0, nv2 = 0;
      for (int ch = 0; ch < D; ++ch) {
        dot += u[ch] * v[ch];
        nu2 += u[ch] * u[ch];
        nv2 += v[ch] * v[ch];
      }
      const double norm = std::sqrt(nu2) * std::sqrt(nv2);
      if (norm <= kCosNormGuard) continue;
      const double cosv = dot / norm;
      const double sgn = cosv >= 0.0 ? 1.0 : -1.0;
      const double inv = 1.0 / norm;
      // d cos/du = v/|u||v| - cos * u/|u|^2, times sign for |cos|.
      for (int ch = 0; ch < D; ++ch) {
        cache.g_vec_base[ub + ch] += upstream * sgn * (v[ch] * inv - cosv * u[ch] / nu2);
        cache.g_vec_dyn[vb + ch] += upstream * sgn * (u[ch] * inv - cosv * v[ch] / nv2);
      }
    }
  }
}

// ---- convenience wrappers built on the cached evaluator ----

namespace {

void fill_per_plane(const PlaneStack& stack, const FieldEvalCache& cache, FieldSample& out) {
  const int D = stack.feature_dim();
  const int S = stack.num_scales();
  const int n_base = static_cast<int>(stack.scales[0].base.size());
  out.per_plane_base.assign(S, {});
  out.per_plane_dynamic.assign(S, {});
  for (int s = 0; s < S; ++s) {
    for (int p = 0; p < n_base; ++p) {
      const double* v = &cache.vec_base[(static_cast<std::size_t>(s) * n_base + p) * D];
      out.per_plane_base[s].emplace_back(v, v + D);
    }
    for (int p = 0; p < static_cast<int>(stack.scales[s].dynamic.size()); ++p) {
      const double* v = &cache.vec_dyn[(static_cast<std::size_t>(s) * 6 + p) * (D + 1)];
      out.per_plane_dynamic[s].emplace_back(v, v + stack.scales[s].dynamic[p].feature_dim);
    }
  }
}

}  // namespace

std::vector<double> interp_plane(const PlaneGrid& plane, const std::array<double, 4>& q) {
  check_unit_cube(q);
  const BilinearFootprint fp =
      plane_footprint(plane, q[axis_u(plane.axes)], q[axis_v(plane.axes)]);
  std::vector<double> out(plane.feature_dim);
  gather(plane, fp, out.data());
  return out;
}

FieldSample sample_stock(const PlaneStack& stack, const std::array<double, 4>& q) {
  if (stack.mode() == FieldMode::Extended)
    throw std::logic_error("sample_stock called on an extended-mode stack");
  FieldEvalCache cache;
  eval_field(stack, q, cache);
  FieldSample out;
  out.f = cache.f;
  fill_per_plane(stack, cache, out);
  return out;
}

FieldSample sample_extended(const PlaneStack& stack, const std::array<double, 4>& q) {
  if (stack.mode() != FieldMode::Extended)
    throw std::logic_error("sample_extended requires an extended-mode stack");
  FieldEvalCache cache;
  eval_field(stack, q, cache);
  FieldSample out;
  out.extended = true;
  out.f_s = cache.f_s;
  out.f_d = cache.f_d;
  out.mask_logits = cache.mask_logits;
  fill_per_plane(stack, cache, out);
  return out;
}

double cosine_separation_loss(std::span<const FieldSample> samples) {
  if (samples.empty()) throw std::invalid_argument("cosine separation over empty sample set");
  double total = 0.0;
  for (const FieldSample& smp : samples) {
    if (!smp.extended || smp.per_plane_dynamic.empty())
      throw std::invalid_argument("cosine separation needs extended samples with per-plane data");
    for (std::size_t s = 0; s < smp.per_plane_base.size(); ++s) {
      for (int p = 0; p < 3; ++p) {
        const auto& u = smp.per_plane_base[s][p];
        const auto& v = smp.per_plane_dynamic[s][p];
        double dot = 0, nu = 0, nv = 0;
        for (std::size_t ch = 0; ch < u.size(); ++ch) {
          dot += u[ch] * v[ch];
          nu += u[ch] * u[ch];
          nv += v[ch] * v[ch];
        }
        const double norm = std::sqrt(nu) * std::sqrt(nv);
        if (norm > kCosNormGuard) total += std::abs(dot / norm);
      }
    }
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace planerf
