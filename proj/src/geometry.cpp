// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace planerf {

void CameraPose::validate(double tol) const {
  Eigen::Matrix3d rrt = rotation.transpose() * rotation;
  if ((rrt - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("CameraPose: rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > tol)
    throw std::invalid_argument("CameraPose: rotation determinant is not +1");
  if (!(intrinsics.fx > 0) || !(intrinsics.fy > 0))
    throw std::invalid_argument("CameraPose: focal lengths must be positive");
  if (intrinsics.width <= 0 || intrinsics.height <= 0)
    throw std::invalid_argument("CameraPose: image size must be positive");
  if (!(intrinsics.cx >= 0 && intrinsics.cx < intrinsics.width))
    throw std::invalid_argument("CameraPose: cx outside [0, width)");
  if (!(intrinsics.cy >= 0 && intrinsics.cy < intrinsics.height))
    throw std::invalid_argument("CameraPose: cy outside [0, height)");
  if (!(timestamp >= 0.0 && timestamp <= 1.0))
    throw std::invalid_argument("CameraPose: timestamp outside [0, 1]");
}

bool CameraPose::project(const Eigen::Vector3d& p, double& u, double& v) const {
  Eigen::Vector3d pc = rotation.transpose() * (p - translation);
  if (!(pc.z() < 0)) return false;  // camera looks along -z
  double inv = -1.0 / pc.z();
  u = intrinsics.fx * pc.x() * inv + intrinsics.cx + 0.5;
  v = intrinsics.cy + 0.5 - intrinsics.fy * pc.y() * inv;
  return true;
}

void SceneBounds::validate() const {
  if (!((min.array() < max.array()).all()))
    throw std::invalid_argument("SceneBounds: min must be < max componentwise");
}

Trajectory::Trajectory(std::vector<CameraPose> p) : poses(std::move(p)) {
  if (poses.size() < 2)
    throw std::invalid_argument("Trajectory: needs at least 2 poses");
  for (std::size_t i = 1; i < poses.size(); ++i)
    if (!(poses[i].timestamp > poses[i - 1].timestamp))
      throw std::invalid_argument("Trajectory: timestamps must be strictly increasing");
}

double Trajectory::frame_interval() const {
  return 1.0 / static_cast<double>(frame_count() - 1);
}

CameraPose Trajectory::pose_at(double s) const {
  if (s < 0.0 || s > 1.0) throw std::invalid_argument("Trajectory::pose_at: s outside [0, 1]");
  const int segments = frame_count() - 1;
  double x = s * segments;
  int seg = std::min(static_cast<int>(x), segments - 1);
  return interpolate_pose(poses[seg], poses[seg + 1], x - seg);
}

Ray ray_for_pixel(const CameraPose& pose, int row, int col, const SceneBounds& bounds) {
  const Intrinsics& k = pose.intrinsics;
  if (row < 0 || row >= k.height || col < 0 || col >= k.width)
    throw std::out_of_range("ray_for_pixel: pixel outside image");

  Eigen::Vector3d dir_cam((col - k.cx) / k.fx, (k.cy - row) / k.fy, -1.0);
  Ray ray;
  ray.origin = pose.translation;
  ray.direction = (pose.rotation * dir_cam).normalized();
  ray.row = row;
  ray.col = col;
  ray.timestamp = pose.timestamp;

  // Slab intersection with the scene box.
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    double o = ray.origin[a], d = ray.direction[a];
    if (std::abs(d) < 1e-15) {
      if (o < bounds.min[a] || o > bounds.max[a]) return ray;  // parallel, outside slab
      continue;
    }
    double ta = (bounds.min[a] - o) / d;
    double tb = (bounds.max[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 < t1) {
    ray.near = t0;
    ray.far = t1;
  }
  return ray;
}

Quat Quat::from_matrix(const Eigen::Matrix3d& m) {
  Quat q;
  double tr = m(0, 0) + m(1, 1) + m(2, 2);
  if (tr > 0) {
    double s = std::sqrt(tr + 1.0) * 2;
    q.w = 0.25 * s;
    q.x = (m(2, 1) - m(1, 2)) / s;
    q.y = (m(0, 2) - m(2, 0)) / s;
    q.z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2;
    q.w = (m(2, 1) - m(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (m(0, 1) + m(1, 0)) / s;
    q.z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2;
    q.w = (m(0, 2) - m(2, 0)) / s;
    q.x = (m(0, 1) + m(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (m(1, 2) + m(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2;
    q.w = (m(1, 0) - m(0, 1)) / s;
    q.x = (m(0, 2) + m(2, 0)) / s;
    q.y = (m(1, 2) + m(2, 1)) / s;
    q.z = 0.25 * s;
  }
  return q.normalized();
}

Quat Quat::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  Eigen::Vector3d a = axis.normalized();
  double h = 0.5 * angle, s = std::sin(h);
  return Quat{std::cos(h), a.x() * s, a.y() * s, a.z() * s};
}

Eigen::Matrix3d Quat::to_matrix() const {
  Eigen::Matrix3d m;
  double xx = x * x, yy = y * y, zz = z * z;
  double xy = x * y, xz = x * z, yz = y * z;
  double wx = w * x, wy = w * y, wz = w * z;
  m << 1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
       2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
       2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy);
  return m;
}

Quat Quat::normalized() const {
  double n = std::sqrt(w * w + x * x + y * y + z * z);
  return Quat{w / n, x / n, y / n, z / n};
}

Quat slerp(const Quat& a, const Quat& b, double s) {
  Quat q1 = b;
  double d = a.dot(b);
  if (d < 0) {  // take the short arc; d == 0 keeps b's stored sign
    d = -d;
    q1 = Quat{-b.w, -b.x, -b.y, -b.z};
  }
  if (d > 1.0 - 1e-12) {  // nearly identical: nlerp avoids 0/0
    Quat q{a.w + s * (q1.w - a.w), a.x + s * (q1.x - a.x),
           a.y + s * (q1.y - a.y), a.z + s * (q1.z - a.z)};
    return q.normalized();
  }
  double theta = std::acos(std::min(1.0, d));
  double inv_sin = 1.0 / std::sin(theta);
  double wa = std::sin((1.0 - s) * theta) * inv_sin;
  double wb = std::sin(s * theta) * inv_sin;
  return Quat{wa * a.w + wb * q1.w, wa * a.x + wb * q1.x,
              wa * a.y + wb * q1.y, wa * a.z + wb * q1.z}
      .normalized();
}

CameraPose interpolate_pose(const CameraPose& p0, const CameraPose& p1, double s) {
  if (s < 0.0 || s > 1.0) throw std::invalid_argument("interpolate_pose: s outside [0, 1]");
  if (s == 0.0) return p0;
  CameraPose out;
  out.intrinsics = p0.intrinsics;
  if (s == 1.0) {
    out.rotation = p1.rotation;
    out.translation = p1.translation;
    out.timestamp = p1.timestamp;
    return out;
  }
  Quat q = slerp(Quat::from_matrix(p0.rotation), Quat::from_matrix(p1.rotation), s);
  out.rotation = q.to_matrix();
  out.translation = (1.0 - s) * p0.translation + s * p1.translation;
  out.timestamp = (1.0 - s) * p0.timestamp + s * p1.timestamp;
  return out;
}

CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up) {
  Eigen::Vector3d f = (target - eye).normalized();
  Eigen::Vector3d u = up;
  if (std::abs(f.dot(u.normalized())) > 0.999) u = Eigen::Vector3d::UnitY();
  Eigen::Vector3d side = f.cross(u).normalized();
  Eigen::Vector3d up2 = side.cross(f);
  CameraPose pose;
  pose.rotation.col(0) = side;
  pose.rotation.col(1) = up2;
  pose.rotation.col(2) = -f;
  pose.translation = eye;
  return pose;
}

}  // namespace planerf
