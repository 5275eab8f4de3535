#pragma once
/**
 * @file rotation.hpp
 * @brief Unit quaternion algebra on the antipodal quotient S^3 / {+-1}.
 *
 * Quaternions are stored scalar first, (q1, q2, q3, q4) = q1 + q2 i + q3 j + q4 k.
 * Every function here is pure; values are cheap to copy.
 */

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <span>
#include <vector>

namespace posekit {

/// Tolerance on |‖q‖ - 1| accepted by validating constructors.
inline constexpr double kUnitTolerance = 1e-6;
/// Vector-part norm below which a rotation axis is undefined.
inline constexpr double kAxisEpsilon = 1e-6;

class UnitQuaternion {
 public:
  /// Identity rotation.
  UnitQuaternion() : q_(1.0, 0.0, 0.0, 0.0) {}

  /// Validates that (w, x, y, z) is unit within kUnitTolerance and renormalizes.
  UnitQuaternion(double w, double x, double y, double z);

  /// Validating constructor from scalar-first coefficients.
  static UnitQuaternion from_coeffs(const Eigen::Vector4d& coeffs);

  /// Projects any non-zero 4-vector onto the sphere. Zero maps to identity.
  static UnitQuaternion normalized(const Eigen::Vector4d& raw);

  double w() const { return q_[0]; }
  double x() const { return q_[1]; }
  double y() const { return q_[2]; }
  double z() const { return q_[3]; }
  double operator[](int i) const { return q_[i]; }

  const Eigen::Vector4d& coeffs() const { return q_; }
  Eigen::Vector3d vec() const { return q_.tail<3>(); }

  UnitQuaternion operator-() const;

  Eigen::Quaterniond to_eigen() const { return {q_[0], q_[1], q_[2], q_[3]}; }
  static UnitQuaternion from_eigen(const Eigen::Quaterniond& q);

  friend bool operator==(const UnitQuaternion& a, const UnitQuaternion& b) {
    return a.q_ == b.q_;
  }

 private:
  struct Trusted {};
  UnitQuaternion(const Eigen::Vector4d& q, Trusted) : q_(q) {}

  Eigen::Vector4d q_;
};

/// Unit 3-vector naming an undirected or directed rotation axis.
class RotationAxis {
 public:
  explicit RotationAxis(const Eigen::Vector3d& v);
  const Eigen::Vector3d& vector() const { return a_; }
  double operator[](int i) const { return a_[i]; }

 private:
  Eigen::Vector3d a_;
};

/// Tangent vector at a base quaternion. Its norm is the geodesic (quaternion) angle.
struct TangentVector {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  double norm() const { return v.norm(); }
};

UnitQuaternion to_hemisphere(const UnitQuaternion& q);

/// Rotation angle between two orientations, arccos(2<q,q'>^2 - 1), in [0, pi].
double rotation_loss(const UnitQuaternion& q, const UnitQuaternion& q_gt);

/// Angle between the quaternion lines, arccos|<q1,q2>|, in [0, pi/2].
double quat_distance(const UnitQuaternion& a, const UnitQuaternion& b);

RotationAxis rotation_axis(const UnitQuaternion& q);

UnitQuaternion multiply(const UnitQuaternion& a, const UnitQuaternion& b);
UnitQuaternion conjugate(const UnitQuaternion& q);
Eigen::Vector3d rotate_point(const UnitQuaternion& q, const Eigen::Vector3d& p);

Eigen::Matrix3d to_matrix(const UnitQuaternion& q);
/// Requires R^T R = I and det R = +1 within 1e-6. Returns the hemisphere form.
UnitQuaternion from_matrix(const Eigen::Matrix3d& R);

/// Left-invariant logarithm: q ~ base * exp(v). Throws near the antipodal boundary.
TangentVector log_map(const UnitQuaternion& base, const UnitQuaternion& q);
UnitQuaternion exp_map(const UnitQuaternion& base, const TangentVector& v);

/// log_map without the boundary check; at exactly pi/2 the direction is arbitrary.
Eigen::Vector3d log_map_unchecked(const UnitQuaternion& base,
                                  const UnitQuaternion& q);

UnitQuaternion from_axis_angle(const Eigen::Vector3d& axis, double angle);

/// Uniform random rotation from four standard normals.
UnitQuaternion from_gaussian(const Eigen::Vector4d& g);

/// Flips q onto the same side as ref (<q, ref> >= 0).
UnitQuaternion align_sign(const UnitQuaternion& q, const UnitQuaternion& ref);

/// Principal eigenvector of sum q q^T, i.e. the sign-invariant chordal mean.
UnitQuaternion chordal_mean(std::span<const UnitQuaternion> quats);

std::vector<UnitQuaternion> hemisphere_all(std::span<const UnitQuaternion> quats);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace posekit
