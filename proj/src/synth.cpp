// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "planerf/parallel.hpp"
#include "planerf/rng.hpp"

namespace planerf {

Eigen::Vector3d Primitive::position(double tau) const {
  if (waypoints.empty()) throw std::logic_error("primitive has no waypoints");
  if (tau <= waypoints.front().first) return waypoints.front().second;
  if (tau >= waypoints.back().first) return waypoints.back().second;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const auto& [t0, p0] = waypoints[i];
    const auto& [t1, p1] = waypoints[i + 1];
    if (tau <= t1) {
      const double s = (tau - t0) / (t1 - t0);
      return p0 + s * (p1 - p0);
    }
  }
  return waypoints.back().second;
}

bool Primitive::moving() const {
  for (const auto& [t, p] : waypoints)
    if ((p - waypoints.front().second).norm() > 0.0) return true;
  return false;
}

namespace {

struct Hit {
  double t = -1.0;
  Eigen::Vector3d normal{0, 0, 1};
  int prim = -2;  // index, -1 = ground, -2 = miss
  bool valid() const { return t > 0.0; }
};

constexpr double kRayEps = 1e-9;

bool hit_sphere(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& c,
                double r, double& t, Eigen::Vector3d& n) {
  const Eigen::Vector3d oc = o - c;
  const double b = oc.dot(d);
  const double disc = b * b - (oc.squaredNorm() - r * r);
  if (disc < 0.0) return false;
  const double root = std::sqrt(disc);
  double tt = -b - root;
  if (tt <= kRayEps) tt = -b + root;
  if (tt <= kRayEps) return false;
  t = tt;
  n = (o + tt * d - c) / r;
  return true;
}

bool hit_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& c,
             const Eigen::Vector3d& h, double& t, Eigen::Vector3d& n) {
  double t0 = -1e300, t1 = 1e300;
  int enter_axis = -1;
  double enter_sign = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double lo = c[a] - h[a], hi = c[a] + h[a];
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo || o[a] > hi) return false;
      continue;
    }
    double ta = (lo - o[a]) / d[a];
    double tb = (hi - o[a]) / d[a];
    double sign = -1.0;  // entering through the low face
    if (ta > tb) {
      std::swap(ta, tb);
      sign = 1.0;
    }
    if (ta > t0) {
      t0 = ta;
      enter_axis = a;
      enter_sign = sign;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  if (t0 <= kRayEps || enter_axis < 0) return false;
  t = t0;
  n = Eigen::Vector3d::Zero();
  n[enter_axis] = enter_sign;
  return true;
}

std::array<double, 3> shade(const std::array<double, 3>& albedo, const Eigen::Vector3d& n,
                            const Eigen::Vector3d& light, double ambient) {
  const double diffuse = std::max(0.0, n.dot(light));
  std::array<double, 3> out;
  for (int c = 0; c < 3; ++c)
    out[c] = std::clamp(albedo[c] * (ambient + (1.0 - ambient) * diffuse), 0.0, 1.0);
  return out;
}

void check_primitive_in_bounds(const Primitive& p, const SceneBounds& bounds, std::size_t idx) {
  if (p.waypoints.empty())
    throw std::invalid_argument("primitive " + std::to_string(idx) + " has no waypoints");
  for (const auto& [tau, c] : p.waypoints) {
    const Eigen::Vector3d ext =
        p.shape == Primitive::Shape::Sphere ? Eigen::Vector3d::Constant(p.radius) : p.half_extent;
    for (int a = 0; a < 3; ++a)
      if (c[a] - ext[a] < bounds.min[a] || c[a] + ext[a] > bounds.max[a])
        throw std::invalid_argument("primitive " + std::to_string(idx) +
                                    " leaves scene bounds at tau=" + std::to_string(tau));
  }
}

}  // namespace

SceneDataset generate_scene(const SceneSpec& spec, int width, int height, int threads) {
  if (spec.frames < 2) throw std::invalid_argument("scene needs at least 2 frames");
  if (width < 8 || height < 8) throw std::invalid_argument("image size too small");
  spec.bounds.validate();
  for (std::size_t i = 0; i < spec.primitives.size(); ++i)
    check_primitive_in_bounds(spec.primitives[i], spec.bounds, i);

  const int F = spec.frames;
  const Eigen::Vector3d light = spec.light_dir.normalized();
  const double ground_z = spec.bounds.min[2];

  SceneDataset ds;
  ds.name = spec.name;
  ds.bounds = spec.bounds;
  ds.width = width;
  ds.height = height;
  ds.frames.resize(F);
  ds.images.resize(F);
  ds.dyn_masks.resize(F);

  Intrinsics intr;
  intr.fx = spec.fx;
  intr.fy = spec.fy;
  intr.cx = (width - 1) * 0.5;  // principal point in pixel-index units
  intr.cy = (height - 1) * 0.5;
  intr.width = width;
  intr.height = height;

  parallel_chunks(static_cast<std::size_t>(F), threads, [&](std::size_t b, std::size_t e, int) {
    char buf[64];
    for (std::size_t f = b; f < e; ++f) {
      const double tau = static_cast<double>(f) / (F - 1);
      // angle runs over [start, start+sweep) without repeating the first pose
      const double ang = (spec.orbit.start_angle_deg +
                          spec.orbit.sweep_deg * static_cast<double>(f) / F) *
                         M_PI / 180.0;
      const Eigen::Vector3d eye(spec.orbit.center[0] + spec.orbit.radius * std::cos(ang),
                                spec.orbit.center[1] + spec.orbit.radius * std::sin(ang),
                                spec.orbit.altitude);
      CameraPose pose = look_at(eye, spec.orbit.center);
      pose.intrinsics = intr;
      pose.timestamp = tau;

      std::vector<Eigen::Vector3d> centers(spec.primitives.size());
      for (std::size_t p = 0; p < spec.primitives.size(); ++p)
        centers[p] = spec.primitives[p].position(tau);

      Image img(width, height, 3);
      Image mask(width, height, 1);
      struct Extent {
        int min_r = 1 << 30, min_c = 1 << 30, max_r = -1, max_c = -1;
      };
      std::vector<Extent> silhouettes(spec.primitives.size());

      for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
          const Eigen::Vector3d dir_cam((c - intr.cx) / intr.fx, (intr.cy - r) / intr.fy, -1.0);
          const Eigen::Vector3d d = (pose.rotation * dir_cam).normalized();
          Hit best;
          best.t = 1e300;
          for (std::size_t p = 0; p < spec.primitives.size(); ++p) {
            const Primitive& prim = spec.primitives[p];
            double t;
            Eigen::Vector3d n;
            const bool ok = prim.shape == Primitive::Shape::Sphere
                                ? hit_sphere(eye, d, centers[p], prim.radius, t, n)
                                : hit_box(eye, d, centers[p], prim.half_extent, t, n);
            if (ok && t < best.t) best = Hit{t, n, static_cast<int>(p)};
          }
          if (std::abs(d[2]) > 1e-15) {  // checkered ground, only inside bounds
            const double t = (ground_z - eye[2]) / d[2];
            if (t > kRayEps && t < best.t) {
              const Eigen::Vector3d hp = eye + t * d;
              if (hp[0] >= spec.bounds.min[0] && hp[0] <= spec.bounds.max[0] &&
                  hp[1] >= spec.bounds.min[1] && hp[1] <= spec.bounds.max[1])
                best = Hit{t, Eigen::Vector3d::UnitZ(), -1};
            }
          }

          std::array<double, 3> color = spec.sky;
          if (best.prim >= -1 && best.t < 1e300) {
            if (best.prim == -1) {
              const Eigen::Vector3d hp = eye + best.t * d;
              const long px = static_cast<long>(std::floor(hp[0] / spec.checker_cell));
              const long py = static_cast<long>(std::floor(hp[1] / spec.checker_cell));
              const auto& albedo = ((px + py) & 1) ? spec.checker_b : spec.checker_a;
              color = shade(albedo, best.normal, light, spec.ambient);
            } else {
              const Primitive& prim = spec.primitives[best.prim];
              color = shade(prim.albedo, best.normal, light, spec.ambient);
              Extent& ex = silhouettes[best.prim];
              ex.min_r = std::min(ex.min_r, r);
              ex.max_r = std::max(ex.max_r, r);
              ex.min_c = std::min(ex.min_c, c);
              ex.max_c = std::max(ex.max_c, c);
              if (prim.moving()) mask.at(r, c) = 1.f;
            }
          }
          for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = static_cast<float>(color[ch]);
        }
      }
      img.quantize8();

      Frame& frame = ds.frames[f];
      frame.pose = pose;
      frame.time = tau;
      std::snprintf(buf, sizeof(buf), "images/frame_%04zu.png", f);
      frame.image_path = buf;
      std::snprintf(buf, sizeof(buf), "masks/frame_%04zu.png", f);
      frame.mask_path = buf;
      for (std::size_t p = 0; p < spec.primitives.size(); ++p) {
        const Primitive& prim = spec.primitives[p];
        const Extent& ex = silhouettes[p];
        if (!prim.moving() || ex.max_r < 0) continue;  // boxes only for visible movers
        GtBox box;
        box.class_id = prim.class_id;
        box.instance_id = prim.instance_id;
        box.x_min = ex.min_c;
        box.y_min = ex.min_r;
        box.x_max = ex.max_c + 1;
        box.y_max = ex.max_r + 1;
        frame.boxes.push_back(box);
      }
      ds.images[f] = std::move(img);
      ds.dyn_masks[f] = std::move(mask);
    }
  });
  return ds;
}

SceneSpec toy_dyn_1() {
  SceneSpec s;
  s.name = "toy-dyn-1";
  s.bounds.min = Eigen::Vector3d(-2.0, -2.0, 0.0);
  s.bounds.max = Eigen::Vector3d(2.0, 2.0, 2.4);
  s.frames = 60;
  s.orbit = OrbitPathSpec{Eigen::Vector3d(0, 0, 0.3), 2.7, 2.2, 0.0, 360.0};
  s.fx = s.fy = 72.0;
  s.checker_cell = 0.5;

  Primitive s1;
  s1.shape = Primitive::Shape::Sphere;
  s1.radius = 0.28;
  s1.albedo = {0.85, 0.15, 0.10};
  s1.class_id = 1;
  s1.instance_id = 1;
  s1.waypoints = {{0.0, {-1.1, -1.1, 0.35}}, {0.5, {0.9, 0.1, 0.35}}, {1.0, {-0.2, 1.1, 0.35}}};

  Primitive s2 = s1;
  s2.albedo = {0.10, 0.75, 0.20};
  s2.instance_id = 2;
  s2.waypoints = {{0.0, {1.0, -1.0, 0.35}}, {0.5, {-0.9, -0.2, 0.35}}, {1.0, {0.2, 0.9, 0.35}}};

  Primitive s3 = s1;
  s3.albedo = {0.15, 0.25, 0.85};
  s3.instance_id = 3;
  s3.waypoints = {{0.0, {0.0, 1.1, 0.35}}, {0.5, {0.3, -0.6, 0.35}}, {1.0, {-1.1, -0.9, 0.35}}};

  Primitive box;
  box.shape = Primitive::Shape::Box;
  box.half_extent = Eigen::Vector3d(0.3, 0.3, 0.3);
  box.albedo = {0.75, 0.60, 0.20};
  box.class_id = 2;
  box.instance_id = 4;
  box.waypoints = {{0.0, {1.1, -1.0, 0.3}}};

  s.primitives = {s1, s2, s3, box};
  return s;
}

SceneDataset perturb_poses(const SceneDataset& dataset, const PoseNoiseSpec& noise) {
  if (noise.rotation_sigma_deg < 0.0 || noise.translation_sigma_frac < 0.0)
    throw std::invalid_argument("noise sigmas must be >= 0");
  SceneDataset out = dataset;
  if (noise.rotation_sigma_deg == 0.0 && noise.translation_sigma_frac == 0.0) return out;
  const double diag = dataset.bounds.diagonal();
  for (std::size_t i = 0; i < out.frames.size(); ++i) {
    Rng rng(mix_seed(noise.seed, i));
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    if (axis.norm() < 1e-12) axis = Eigen::Vector3d::UnitZ();
    axis.normalize();
    const double angle = rng.normal(noise.rotation_sigma_deg) * M_PI / 180.0;
    const Eigen::Matrix3d rot = Quat::from_axis_angle(axis, angle).to_matrix();
    Eigen::Vector3d offset;
    for (int a = 0; a < 3; ++a) offset[a] = rng.normal(noise.translation_sigma_frac * diag);
    CameraPose& pose = out.frames[i].pose;
    pose.rotation = rot * pose.rotation;
    pose.translation += offset;
    pose.validate();
  }
  return out;
}

}  // namespace planerf
