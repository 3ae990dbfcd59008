// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace planerf {

struct Intrinsics {
  double fx = 0, fy = 0;  // focal lengths, pixels
  double cx = 0, cy = 0;  // principal point, pixels
  int width = 0, height = 0;
};

// Rigid camera-to-world transform plus pinhole intrinsics and a normalized
// scene timestamp in [0, 1].
//
// Convention (fixed for the whole project): right-handed world, the camera
// looks along -z in its own frame, +x is image right, +y is image up, and
// image rows grow downward (so camera +y maps to decreasing row). The
// principal point (cx, cy) is given in pixel-index units: the ray of pixel
// index (row, col) = (cy, cx) is the optical axis, and pixel index i sits at
// continuous image coordinate i + 0.5.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // camera-to-world
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();   // camera center, world
  Intrinsics intrinsics;
  double timestamp = 0.0;

  // Throws std::invalid_argument if any CameraPose invariant is violated
  // (orthonormality/det within `tol`, intrinsics ranges, timestamp range).
  void validate(double tol = 1e-6) const;

  // World point -> continuous image coordinates (u, v); u grows with column,
  // v with row, pixel (r, c) has center (c + 0.5, r + 0.5).
  // Returns false if the point is not strictly in front of the camera.
  bool project(const Eigen::Vector3d& p, double& u, double& v) const;
};

struct Ray {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();  // unit length
  double near = 0.0, far = 0.0;                          // meters along direction
  int row = 0, col = 0;                                  // source pixel
  double timestamp = 0.0;

  // A ray that misses the scene bounds; rendered as pure background.
  bool empty() const { return !(near < far); }
};

// Axis-aligned scene box; the normalization domain for plane queries.
struct SceneBounds {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Ones();

  void validate() const;
  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Eigen::Vector3d center() const { return 0.5 * (min + max); }
  Eigen::Vector3d extent() const { return max - min; }
  double diagonal() const { return (max - min).norm(); }
};

// Ordered camera poses with strictly increasing timestamps.
// frame_interval() is one frame step in normalized time: with F uniformly
// spaced frames covering [0, 1], that step is 1/(F-1).
struct Trajectory {
  std::vector<CameraPose> poses;

  explicit Trajectory(std::vector<CameraPose> p);
  int frame_count() const { return static_cast<int>(poses.size()); }
  double frame_interval() const;

  // Pose at interpolation parameter s in [0, 1] along the whole trajectory
  // (s * (F - 1) selects a segment; slerp/lerp within it).
  CameraPose pose_at(double s) const;
};

// Casts the ray through the center of pixel (row, col). near/far come from
// intersecting the ray with `bounds` (near clamped to >= 0); a miss yields
// an empty ray. Throws std::out_of_range for pixels outside the image.
Ray ray_for_pixel(const CameraPose& pose, int row, int col, const SceneBounds& bounds);

// Spherical linear interpolation of rotation, linear interpolation of
// translation and timestamp; intrinsics are copied from p0. When the two
// rotations' unit quaternions have exactly zero dot product (antipodal tie),
// q1 is used as stored, which keeps the path in p0's hemisphere.
CameraPose interpolate_pose(const CameraPose& p0, const CameraPose& p1, double s);

// Camera at `eye` oriented so its -z axis points at `target`. `up` breaks the
// roll ambiguity; near-degenerate up (parallel to the view direction) falls
// back to +y world.
CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());

// Unit quaternion, used for pose interpolation and perturbation.
struct Quat {
  double w = 1, x = 0, y = 0, z = 0;

  static Quat from_matrix(const Eigen::Matrix3d& m);
  static Quat from_axis_angle(const Eigen::Vector3d& axis, double angle);
  Eigen::Matrix3d to_matrix() const;
  Quat normalized() const;
  double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
};

Quat slerp(const Quat& a, const Quat& b, double s);

}  // namespace planerf
