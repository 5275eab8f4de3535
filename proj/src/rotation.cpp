#include "posekit/rotation.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <sstream>

#include "posekit/errors.hpp"

namespace posekit {

namespace {

void check_unit(const Eigen::Vector4d& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitTolerance) {
    std::ostringstream os;
    os << "quaternion norm " << n << " deviates from 1";
    throw Error(ErrorCode::kInvalidQuaternion, os.str());
  }
}

}  // namespace

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z)
    : q_(w, x, y, z) {
  check_unit(q_);
  // Leave already-unit input untouched so text round trips are bit-exact.
  const double n = q_.norm();
  if (std::abs(n - 1.0) > 1e-15) q_ /= n;
}

UnitQuaternion UnitQuaternion::from_coeffs(const Eigen::Vector4d& coeffs) {
  return {coeffs[0], coeffs[1], coeffs[2], coeffs[3]};
}

UnitQuaternion UnitQuaternion::normalized(const Eigen::Vector4d& raw) {
  const double n = raw.norm();
  if (!(n > 1e-300) || !std::isfinite(n)) return UnitQuaternion();
  return UnitQuaternion(raw / n, Trusted{});
}

UnitQuaternion UnitQuaternion::operator-() const {
  return UnitQuaternion(-q_, Trusted{});
}

UnitQuaternion UnitQuaternion::from_eigen(const Eigen::Quaterniond& q) {
  return normalized(Eigen::Vector4d(q.w(), q.x(), q.y(), q.z()));
}

RotationAxis::RotationAxis(const Eigen::Vector3d& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kDegenerateAxis, "zero-length axis");
  }
  a_ = v / n;
}

UnitQuaternion to_hemisphere(const UnitQuaternion& q) {
  check_unit(q.coeffs());
  if (q.w() > 0.0) return q;
  if (q.w() < 0.0) return -q;
  // Tie on the q1 = 0 hyperplane: first nonzero of (q2, q3, q4) positive.
  for (int i = 1; i < 4; ++i) {
    if (q[i] > 0.0) return q;
    if (q[i] < 0.0) return -q;
  }
  return q;
}

double quat_distance(const UnitQuaternion& a, const UnitQuaternion& b) {
  // arccos|<a,b>| evaluated as 2 atan2(|a-b|, |a+b|) with b sign-aligned,
  // which stays accurate (and exactly zero) near coincidence.
  const Eigen::Vector4d& qa = a.coeffs();
  Eigen::Vector4d qb = b.coeffs();
  if (qa.dot(qb) < 0.0) qb = -qb;
  return 2.0 * std::atan2((qa - qb).norm(), (qa + qb).norm());
}

double rotation_loss(const UnitQuaternion& q, const UnitQuaternion& q_gt) {
  // arccos(2<q,q'>^2 - 1) == 2 arccos|<q,q'>|.
  return 2.0 * quat_distance(q, q_gt);
}

RotationAxis rotation_axis(const UnitQuaternion& q) {
  const Eigen::Vector3d v = q.vec();
  if (v.norm() <= kAxisEpsilon) {
    throw Error(ErrorCode::kDegenerateAxis, "near-identity rotation has no axis");
  }
  return RotationAxis(v);
}

UnitQuaternion multiply(const UnitQuaternion& a, const UnitQuaternion& b) {
  return UnitQuaternion::from_eigen(a.to_eigen() * b.to_eigen());
}

UnitQuaternion conjugate(const UnitQuaternion& q) {
  return UnitQuaternion::normalized(Eigen::Vector4d(q.w(), -q.x(), -q.y(), -q.z()));
}

Eigen::Vector3d rotate_point(const UnitQuaternion& q, const Eigen::Vector3d& p) {
  return q.to_eigen() * p;
}

Eigen::Matrix3d to_matrix(const UnitQuaternion& q) {
  return q.to_eigen().toRotationMatrix();
}

UnitQuaternion from_matrix(const Eigen::Matrix3d& R) {
  if (!R.allFinite() ||
      (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(R.determinant() - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidRotation, "matrix is not a proper rotation");
  }
  return to_hemisphere(UnitQuaternion::from_eigen(Eigen::Quaterniond(R)));
}

Eigen::Vector3d log_map_unchecked(const UnitQuaternion& base,
                                  const UnitQuaternion& q) {
  Eigen::Quaterniond r = base.to_eigen().conjugate() * q.to_eigen();
  if (r.w() < 0.0) r.coeffs() = -r.coeffs();
  const Eigen::Vector3d v = r.vec();
  const double s = v.norm();
  if (s < 1e-300) return Eigen::Vector3d::Zero();
  const double angle = std::atan2(s, r.w());
  return v * (angle / s);
}

TangentVector log_map(const UnitQuaternion& base, const UnitQuaternion& q) {
  const Eigen::Vector3d v = log_map_unchecked(base, q);
  if (std::abs(v.norm() - std::numbers::pi / 2.0) <= 1e-9) {
    throw Error(ErrorCode::kIllConditionedLog,
                "point lies on the antipodal boundary of the base");
  }
  return {v};
}

UnitQuaternion exp_map(const UnitQuaternion& base, const TangentVector& v) {
  const double angle = v.norm();
  Eigen::Vector4d e(1.0, 0.0, 0.0, 0.0);
  if (angle > 0.0) {
    e[0] = std::cos(angle);
    e.tail<3>() = v.v * (std::sin(angle) / angle);
  }
  const Eigen::Quaterniond step(e[0], e[1], e[2], e[3]);
  return UnitQuaternion::from_eigen(base.to_eigen() * step);
}

UnitQuaternion from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  return UnitQuaternion::from_eigen(
      Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
}

UnitQuaternion from_gaussian(const Eigen::Vector4d& g) {
  return UnitQuaternion::normalized(g);
}

UnitQuaternion align_sign(const UnitQuaternion& q, const UnitQuaternion& ref) {
  return q.coeffs().dot(ref.coeffs()) < 0.0 ? -q : q;
}

UnitQuaternion chordal_mean(std::span<const UnitQuaternion> quats) {
  if (quats.empty()) throw Error(ErrorCode::kEmptyInput, "chordal mean of nothing");
  Eigen::Matrix4d scatter = Eigen::Matrix4d::Zero();
  for (const auto& q : quats) scatter += q.coeffs() * q.coeffs().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(scatter);
  return to_hemisphere(UnitQuaternion::normalized(eig.eigenvectors().col(3)));
}

std::vector<UnitQuaternion> hemisphere_all(std::span<const UnitQuaternion> quats) {
  std::vector<UnitQuaternion> out;
  out.reserve(quats.size());
  for (const auto& q : quats) out.push_back(to_hemisphere(q));
  return out;
}

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace posekit
