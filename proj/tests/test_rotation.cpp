#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "posekit/errors.hpp"
#include "posekit/rotation.hpp"
#include "test_util.hpp"

namespace posekit {
namespace {

using testing::random_quat;
using testing::rot_z_deg;
constexpr double kPi = std::numbers::pi;

TEST(UnitQuaternion, RejectsNonUnit) {
  EXPECT_THROW(UnitQuaternion(1.0, 0.1, 0.0, 0.0), Error);
  EXPECT_NO_THROW(UnitQuaternion(1.0 + 5e-7, 0.0, 0.0, 0.0));
  try {
    UnitQuaternion(2.0, 0.0, 0.0, 0.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidQuaternion);
  }
}

TEST(Hemisphere, Examples) {
  EXPECT_EQ(to_hemisphere(UnitQuaternion(1, 0, 0, 0)), UnitQuaternion(1, 0, 0, 0));
  EXPECT_EQ(to_hemisphere(UnitQuaternion(-1, 0, 0, 0)), UnitQuaternion(1, 0, 0, 0));
  EXPECT_EQ(to_hemisphere(UnitQuaternion(-0.5, 0.5, 0.5, 0.5)),
            UnitQuaternion(0.5, -0.5, -0.5, -0.5));
}

TEST(Hemisphere, TieBreakOnZeroScalar) {
  EXPECT_EQ(to_hemisphere(UnitQuaternion(0, 0, -1, 0)), UnitQuaternion(0, 0, 1, 0));
  EXPECT_EQ(to_hemisphere(UnitQuaternion(0, 0, 0.6, -0.8)), UnitQuaternion(0, 0, 0.6, -0.8));
  EXPECT_EQ(to_hemisphere(UnitQuaternion(0, -0.6, 0.8, 0)), UnitQuaternion(0, 0.6, -0.8, 0));
}

TEST(Hemisphere, IdempotentAndRotationPreserving) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const UnitQuaternion q = random_quat(rng);
    const UnitQuaternion h = to_hemisphere(q);
    EXPECT_GE(h.w(), 0.0);
    EXPECT_EQ(to_hemisphere(h), h);
    EXPECT_LE((to_matrix(h) - to_matrix(q)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RotationLoss, Identities) {
  std::mt19937_64 rng(3);
  const UnitQuaternion q = random_quat(rng);
  EXPECT_EQ(rotation_loss(q, q), 0.0);
  EXPECT_EQ(rotation_loss(q, -q), 0.0);
  // Oracle: arccos((trace(R) - 1) / 2) on the rotation matrix.
  const Eigen::Matrix3d R = Eigen::AngleAxisd(kPi / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const double oracle = std::acos((R.trace() - 1.0) / 2.0);
  EXPECT_NEAR(rotation_loss(UnitQuaternion(), rot_z_deg(90)), oracle, 1e-12);
  EXPECT_NEAR(oracle, kPi / 2, 1e-12);
}

TEST(RotationLoss, TwiceDistanceAndSignInvariant) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10000; ++i) {
    const UnitQuaternion a = random_quat(rng);
    const UnitQuaternion b = random_quat(rng);
    const double l = rotation_loss(a, b);
    EXPECT_NEAR(l, 2.0 * quat_distance(a, b), 1e-9);
    EXPECT_EQ(l, rotation_loss(-a, b));
    EXPECT_EQ(l, rotation_loss(a, -b));
    EXPECT_NEAR(l, testing::matrix_angle(to_matrix(a), to_matrix(b)), 1e-6);
  }
}

TEST(QuatDistance, Examples) {
  std::mt19937_64 rng(7);
  const UnitQuaternion q = random_quat(rng);
  EXPECT_EQ(quat_distance(q, q), 0.0);
  EXPECT_EQ(quat_distance(q, -q), 0.0);
  const Eigen::Vector4d a(1, 0, 0, 0), b(0, 0, 0, 1);
  ASSERT_EQ(a.dot(b), 0.0);
  EXPECT_NEAR(quat_distance(UnitQuaternion(), rot_z_deg(180)), std::acos(std::abs(a.dot(b))), 1e-12);
}

TEST(RotationAxis, Examples) {
  const RotationAxis z = rotation_axis(rot_z_deg(90));
  EXPECT_NEAR((z.vector() - Eigen::Vector3d::UnitZ()).norm(), 0.0, 1e-12);
  const RotationAxis x = rotation_axis(testing::axis_deg(Eigen::Vector3d::UnitX(), 10));
  EXPECT_NEAR((x.vector() - Eigen::Vector3d::UnitX()).norm(), 0.0, 1e-12);
  try {
    rotation_axis(UnitQuaternion());
    FAIL() << "identity has no axis";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateAxis);
  }
}

TEST(Composition, Examples) {
  std::mt19937_64 rng(13);
  const UnitQuaternion q = random_quat(rng);
  const UnitQuaternion id = multiply(q, conjugate(q));
  EXPECT_NEAR(quat_distance(id, UnitQuaternion()), 0.0, 1e-12);
  const Eigen::Vector3d p(0.3, -1.2, 2.0);
  EXPECT_EQ(rotate_point(UnitQuaternion(), p), p);
  const Eigen::Matrix3d R = Eigen::AngleAxisd(kPi / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Vector3d expected = R * Eigen::Vector3d::UnitX();
  EXPECT_NEAR((rotate_point(rot_z_deg(90), Eigen::Vector3d::UnitX()) - expected).norm(), 0.0, 1e-12);
  EXPECT_NEAR((expected - Eigen::Vector3d::UnitY()).norm(), 0.0, 1e-12);
}

TEST(Composition, MatchesMatrixProduct) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 10000; ++i) {
    const UnitQuaternion a = random_quat(rng);
    const UnitQuaternion b = random_quat(rng);
    const Eigen::Matrix3d lhs = to_matrix(multiply(a, b));
    EXPECT_LE((lhs - to_matrix(a) * to_matrix(b)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Matrix, Examples) {
  EXPECT_LE((to_matrix(UnitQuaternion()) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 0.0);
  // Rodrigues: R = I + sin(t) K + (1 - cos(t)) K^2 with K the cross matrix of z.
  Eigen::Matrix3d K;
  K << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  const double t = kPi / 2;
  const Eigen::Matrix3d rodrigues = Eigen::Matrix3d::Identity() + std::sin(t) * K + (1 - std::cos(t)) * K * K;
  Eigen::Matrix3d expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LE((rodrigues - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((to_matrix(rot_z_deg(90)) - rodrigues).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Matrix, RoundTrip) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 1000; ++i) {
    const UnitQuaternion q = random_quat(rng);
    const UnitQuaternion back = from_matrix(to_matrix(q));
    EXPECT_LE((back.coeffs() - to_hemisphere(q).coeffs()).norm(), 1e-12);
  }
}

TEST(Matrix, RejectsNonRotation) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 1) = 0.1;
  EXPECT_THROW(from_matrix(m), Error);
  EXPECT_THROW(from_matrix(-Eigen::Matrix3d::Identity()), Error);
}

TEST(LogExp, Examples) {
  std::mt19937_64 rng(23);
  const UnitQuaternion q = random_quat(rng);
  EXPECT_EQ(log_map(q, q).v, Eigen::Vector3d::Zero());
  EXPECT_NEAR(quat_distance(exp_map(q, TangentVector{Eigen::Vector3d::Zero()}), q), 0.0, 1e-15);
  EXPECT_NEAR(log_map(UnitQuaternion(), rot_z_deg(60)).norm(), kPi / 6, 1e-12);
  EXPECT_NEAR(log_map(UnitQuaternion(), rot_z_deg(60)).norm(),
              quat_distance(UnitQuaternion(), rot_z_deg(60)), 1e-12);
}

TEST(LogExp, RoundTripAndBoundary) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 1000; ++i) {
    const UnitQuaternion base = random_quat(rng);
    const UnitQuaternion q = random_quat(rng);
    const TangentVector v = log_map(base, q);
    EXPECT_LE(v.norm(), kPi / 2);
    EXPECT_NEAR(quat_distance(exp_map(base, v), q), 0.0, 1e-9);
  }
  try {
    log_map(UnitQuaternion(), rot_z_deg(180));
    FAIL() << "antipodal boundary accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIllConditionedLog);
  }
}

TEST(ChordalMean, SymmetricPair) {
  const std::vector<UnitQuaternion> qs = {rot_z_deg(20), -rot_z_deg(-20)};
  EXPECT_NEAR(quat_distance(chordal_mean(qs), UnitQuaternion()), 0.0, 1e-12);
}

}  // namespace
}  // namespace posekit
