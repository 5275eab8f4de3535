#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "posekit/rotation.hpp"

namespace posekit::testing {

inline UnitQuaternion random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return from_gaussian(Eigen::Vector4d(n(rng), n(rng), n(rng), n(rng)));
}

inline Eigen::Vector3d random_unit3(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
}

/// Rotation of `deg` degrees about a unit axis, built with Eigen directly.
inline UnitQuaternion axis_deg(const Eigen::Vector3d& axis, double deg) {
  const Eigen::Quaterniond q(Eigen::AngleAxisd(deg * std::numbers::pi / 180.0, axis.normalized()));
  return UnitQuaternion::normalized(Eigen::Vector4d(q.w(), q.x(), q.y(), q.z()));
}

inline UnitQuaternion rot_z_deg(double deg) { return axis_deg(Eigen::Vector3d::UnitZ(), deg); }

/// Small random perturbation: rotation of at most `max_deg` about a random axis.
inline UnitQuaternion perturb(const UnitQuaternion& q, double max_deg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, max_deg);
  return multiply(q, axis_deg(random_unit3(rng), u(rng)));
}

/// Angle between rotation matrices, independent of the quaternion code path.
inline double matrix_angle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace posekit::testing
