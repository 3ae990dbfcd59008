// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planerf/geometry.hpp"

namespace planerf {

// Randomized orbit around a look-at target for novel static views.
//
// Azimuth is uniform on [0, 360) degrees; altitude (height above the center)
// and the depression angle from horizontal are uniform in their ranges. The
// orbit radius follows from altitude and angle (radius = altitude / tan(angle))
// and is clamped into [radius_lo, radius_hi]; when the clamp fires, the camera
// keeps looking at the center, so the effective depression angle moves off the
// sampled value. Every camera's optical axis passes through `center` exactly.
struct OrbitSpec {
  Eigen::Vector3d center{0, 0, 0};
  double altitude_lo = 10.0, altitude_hi = 10.0;  // meters above center
  double radius_lo = 10.0, radius_hi = 10.0;      // horizontal meters
  double angle_lo_deg = 45.0, angle_hi_deg = 45.0;
  int count = 1;
  std::uint64_t seed = 0;
  Intrinsics intrinsics;
  // Poses inserted between consecutive sampled waypoints (0 = waypoints only).
  int interp_density = 0;

  void validate() const;
};

std::vector<CameraPose> sample_static_poses(const OrbitSpec& spec);

// One render request: where, when, and which augmentation bucket it belongs
// to. Tags: static_novel | dyn_t | dyn_t_minus | dyn_t_plus.
struct NovelViewRequest {
  CameraPose pose;
  double timestamp = 0.0;
  std::string tag = "static_novel";
};

// Draws N locations on the trajectory (half-frame granularity, without
// replacement when possible; otherwise with replacement plus a warning on
// stderr) and emits, per location, three requests at times t, t-dt, t+dt
// (dt = frame interval, times clamped to [0,1]) sharing one pose.
std::vector<NovelViewRequest> sample_dynamic_requests(const Trajectory& traj, int n,
                                                      std::uint64_t seed);

// Wraps orbit poses as static_novel requests at mid-sequence time 0.5.
std::vector<NovelViewRequest> static_requests(const std::vector<CameraPose>& poses);

nlohmann::json requests_to_json(const std::vector<NovelViewRequest>& requests);
std::vector<NovelViewRequest> requests_from_json(const nlohmann::json& j);
void save_requests(const std::vector<NovelViewRequest>& requests,
                   const std::filesystem::path& path);
std::vector<NovelViewRequest> load_requests(const std::filesystem::path& path);

}  // namespace planerf
