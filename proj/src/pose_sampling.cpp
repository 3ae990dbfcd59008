// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/pose_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "planerf/dataset.hpp"
#include "planerf/rng.hpp"

namespace planerf {

using nlohmann::json;

void OrbitSpec::validate() const {
  if (!(altitude_lo <= altitude_hi) || !(radius_lo <= radius_hi) ||
      !(angle_lo_deg <= angle_hi_deg))
    throw std::invalid_argument("orbit ranges must satisfy lo <= hi");
  if (radius_lo < 0.0) throw std::invalid_argument("orbit radius must be non-negative");
  if (!(angle_lo_deg > 0.0) || !(angle_hi_deg <= 90.0))
    throw std::invalid_argument("orbit view angle must lie in (0, 90] degrees");
  if (count < 1) throw std::invalid_argument("orbit count must be >= 1");
  if (interp_density < 0) throw std::invalid_argument("interp_density must be >= 0");
}

std::vector<CameraPose> sample_static_poses(const OrbitSpec& spec) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, 0x6f726269745fULL));
  std::vector<CameraPose> waypoints;
  waypoints.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i) {
    const double azimuth = rng.uniform() * 2.0 * M_PI;
    const double altitude = spec.altitude_lo + rng.uniform() * (spec.altitude_hi - spec.altitude_lo);
    const double angle_deg =
        spec.angle_lo_deg + rng.uniform() * (spec.angle_hi_deg - spec.angle_lo_deg);
    const double angle = angle_deg * M_PI / 180.0;
    double radius = angle >= 90.0 * M_PI / 180.0 ? 0.0 : altitude / std::tan(angle);
    radius = std::clamp(radius, spec.radius_lo, spec.radius_hi);
    const Eigen::Vector3d eye(spec.center[0] + radius * std::cos(azimuth),
                              spec.center[1] + radius * std::sin(azimuth),
                              spec.center[2] + altitude);
    CameraPose pose = look_at(eye, spec.center);
    pose.intrinsics = spec.intrinsics;
    pose.timestamp = 0.5;
    waypoints.push_back(pose);
  }
  if (spec.interp_density == 0 || waypoints.size() < 2) return waypoints;
  std::vector<CameraPose> out;
  out.reserve(waypoints.size() + (waypoints.size() - 1) * spec.interp_density);
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    out.push_back(waypoints[i]);
    for (int k = 1; k <= spec.interp_density; ++k) {
      const double s = static_cast<double>(k) / (spec.interp_density + 1);
      out.push_back(interpolate_pose(waypoints[i], waypoints[i + 1], s));
    }
  }
  out.push_back(waypoints.back());
  return out;
}

std::vector<NovelViewRequest> sample_dynamic_requests(const Trajectory& traj, int n,
                                                      std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("request count must be >= 1");
  if (traj.frame_count() < 2) throw std::invalid_argument("trajectory needs >= 2 poses");
  const double dt = traj.frame_interval();
  // Candidate locations on a half-frame grid along the trajectory parameter.
  const std::size_t grid = 2 * (traj.frame_count() - 1) + 1;
  Rng rng(mix_seed(seed, 0x64796e726571ULL));

  std::vector<std::size_t> picks;
  picks.reserve(n);
  if (static_cast<std::size_t>(n) <= grid) {
    std::vector<std::size_t> pool(grid);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < n; ++i) {  // partial Fisher-Yates
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      picks.push_back(pool[i]);
    }
  } else {
    std::cerr << "warning: requested " << n << " locations but only " << grid
              << " are distinct; sampling with replacement\n";
    for (int i = 0; i < n; ++i) picks.push_back(static_cast<std::size_t>(rng.below(grid)));
  }

  std::vector<NovelViewRequest> out;
  out.reserve(3 * static_cast<std::size_t>(n));
  for (const std::size_t k : picks) {
    const double s = static_cast<double>(k) / (grid - 1);
    const CameraPose pose = traj.pose_at(s);
    const double t = std::clamp(pose.timestamp, 0.0, 1.0);
    out.push_back({pose, t, "dyn_t"});
    out.push_back({pose, std::clamp(t - dt, 0.0, 1.0), "dyn_t_minus"});
    out.push_back({pose, std::clamp(t + dt, 0.0, 1.0), "dyn_t_plus"});
  }
  return out;
}

std::vector<NovelViewRequest> static_requests(const std::vector<CameraPose>& poses) {
  std::vector<NovelViewRequest> out;
  out.reserve(poses.size());
  for (const CameraPose& p : poses) out.push_back({p, 0.5, "static_novel"});
  return out;
}

namespace {

const char* kTags[] = {"static_novel", "dyn_t", "dyn_t_minus", "dyn_t_plus"};

bool known_tag(const std::string& tag) {
  return std::find(std::begin(kTags), std::end(kTags), tag) != std::end(kTags);
}

}  // namespace

json requests_to_json(const std::vector<NovelViewRequest>& requests) {
  json arr = json::array();
  for (const NovelViewRequest& r : requests) {
    json j = pose_to_json(r.pose);
    j["time"] = r.timestamp;
    j["tag"] = r.tag;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<NovelViewRequest> requests_from_json(const json& j) {
  if (!j.is_array()) throw std::runtime_error("request list must be a JSON array");
  std::vector<NovelViewRequest> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = "request " + std::to_string(i);
    NovelViewRequest r;
    r.pose = pose_from_json(j[i], ctx);
    r.timestamp = j[i].at("time").get<double>();
    if (!(r.timestamp >= 0.0 && r.timestamp <= 1.0))
      throw std::runtime_error(ctx + ": time outside [0,1]");
    r.tag = j[i].at("tag").get<std::string>();
    if (!known_tag(r.tag)) throw std::runtime_error(ctx + ": unknown tag \"" + r.tag + "\"");
    r.pose.timestamp = r.timestamp;
    try {
      r.pose.validate();
    } catch (const std::exception& e) {
      throw std::runtime_error(ctx + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_requests(const std::vector<NovelViewRequest>& requests,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write request list: " + path.string());
  out << requests_to_json(requests).dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing request list: " + path.string());
}

std::vector<NovelViewRequest> load_requests(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open request list: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed request list " + path.string() + ": " + e.what());
  }
  return requests_from_json(j);
}

}  // namespace planerf
