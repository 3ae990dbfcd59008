// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "planerf/dataset.hpp"

namespace planerf {

// Moving or static primitive over the ground plane. Position is piecewise
// linear in normalized time between waypoints.
struct Primitive {
  enum class Shape { Sphere, Box };
  Shape shape = Shape::Sphere;
  double radius = 0.25;                                 // sphere
  Eigen::Vector3d half_extent{0.25, 0.25, 0.25};        // box
  std::array<double, 3> albedo{0.8, 0.2, 0.2};
  std::vector<std::pair<double, Eigen::Vector3d>> waypoints;  // (tau, center)
  int class_id = 1;
  int instance_id = 1;

  Eigen::Vector3d position(double tau) const;
  bool moving() const;
};

struct OrbitPathSpec {
  Eigen::Vector3d center{0, 0, 0};  // look-at target
  double radius = 2.6;
  double altitude = 2.0;
  double start_angle_deg = 0.0;
  double sweep_deg = 360.0;
};

struct SceneSpec {
  std::string name = "scene";
  SceneBounds bounds;
  int frames = 60;
  OrbitPathSpec orbit;
  double fx = 70.0, fy = 70.0;  // principal point defaults to image center
  // Ground plane at bounds.min.z with a two-color checker texture.
  double checker_cell = 0.5;  // meters
  std::array<double, 3> checker_a{0.82, 0.8, 0.74};
  std::array<double, 3> checker_b{0.28, 0.3, 0.34};
  std::array<double, 3> sky{0, 0, 0};  // color for rays that miss everything
  Eigen::Vector3d light_dir{-0.45, -0.35, 0.82};  // direction toward the light
  double ambient = 0.35;
  std::vector<Primitive> primitives;
};

// The standard toy scene every desk-scale experiment anchors on: three
// moving spheres and one static box over a checkered ground, circular orbit.
SceneSpec toy_dyn_1();

// Renders every frame with a direct analytic ray caster (closed-form
// ray-sphere / ray-box / ray-plane hits, Lambert shading) and derives
// ground-truth boxes and dynamic masks from the visible silhouettes of
// moving primitives. Images come back already quantized to 8-bit levels.
// This path shares no integration code with the volume renderer; it is the
// oracle and data source the field is trained against.
SceneDataset generate_scene(const SceneSpec& spec, int width, int height, int threads = 1);

struct PoseNoiseSpec {
  double rotation_sigma_deg = 0.0;
  double translation_sigma_frac = 0.0;  // fraction of the scene diagonal
  uint64_t seed = 0;
};

// Composes each pose with a random rotation (axis uniform on the sphere,
// angle ~ N(0, rotation_sigma)) and a per-axis N(0, sigma_t * diagonal)
// translation offset. Images and ground truth stay untouched.
SceneDataset perturb_poses(const SceneDataset& dataset, const PoseNoiseSpec& noise);

}  // namespace planerf
