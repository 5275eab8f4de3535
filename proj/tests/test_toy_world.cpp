#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "posekit/errors.hpp"
#include "posekit/mhp_model.hpp"
#include "posekit/toy_world.hpp"
#include "test_util.hpp"

namespace posekit {
namespace {

using testing::random_quat;
constexpr double kPi = std::numbers::pi;

double brute_diameter(const std::vector<Eigen::Vector3d>& pts) {
  double d = 0.0;
  for (const auto& a : pts) {
    for (const auto& b : pts) d = std::max(d, (a - b).norm());
  }
  return d;
}

bool hidden_at(const ToyObject& obj, const Eigen::Matrix3d& pose, double theta) {
  const Eigen::Matrix3d r = pose * Eigen::AngleAxisd(theta, obj.axis).toRotationMatrix();
  return (r * obj.feature).z() > obj.visibility_threshold;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

TEST(Objects, CubeGroupClosureAndOrder) {
  const ToyObject cube = make_object(ObjectKind::kCube);
  EXPECT_EQ(cube.model_points.size(), 26u);
  ASSERT_EQ(cube.group.size(), 4u);
  for (const auto& a : cube.group) {
    for (const auto& b : cube.group) {
      const Eigen::Matrix3d p = a * b;
      EXPECT_TRUE(std::any_of(cube.group.begin(), cube.group.end(),
                              [&](const Eigen::Matrix3d& g) { return g == p; }));
    }
  }
  // Some element generates the whole group: order 4.
  bool cyclic = false;
  for (const auto& g : cube.group) {
    const Eigen::Matrix3d g2 = g * g;
    if (g2 != Eigen::Matrix3d::Identity() && g2 * g2 == Eigen::Matrix3d::Identity()) cyclic = true;
  }
  EXPECT_TRUE(cyclic);
  // Every group element maps the model point set onto itself.
  for (const auto& g : cube.group) {
    for (const auto& p : cube.model_points) {
      const Eigen::Vector3d q = g * p;
      EXPECT_TRUE(std::any_of(cube.model_points.begin(), cube.model_points.end(),
                              [&](const Eigen::Vector3d& r) { return (r - q).norm() < 1e-15; }));
    }
  }
  EXPECT_NEAR(cube.diameter, brute_diameter(cube.model_points), 1e-15);
}

TEST(Objects, CupAndCylinder) {
  const ToyObject cup = make_object(ObjectKind::kCup);
  EXPECT_EQ(cup.symmetry, SymmetryKind::kViewConditionalArc);
  EXPECT_NEAR(cup.diameter, brute_diameter(cup.model_points), 1e-15);
  const ToyObject cyl = make_object(ObjectKind::kCylinder);
  EXPECT_EQ(cyl.symmetry, SymmetryKind::kContinuousAxis);
  EXPECT_EQ(parse_object_kind("cup"), ObjectKind::kCup);
  EXPECT_EQ(to_string(ObjectKind::kCylinder), "cylinder");
  EXPECT_THROW(parse_object_kind("teapot"), Error);
}

TEST(SymmetrySet, CubeHasFourMembers) {
  const ToyObject cube = make_object(ObjectKind::kCube);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const UnitQuaternion pose = random_quat(rng);
    const SymmetrySet set = symmetry_set(cube, pose);
    ASSERT_EQ(set.members.size(), 4u);
    EXPECT_TRUE(set.ambiguous());
    const auto qs = set.quaternions();
    // Members pass through a rotation matrix, so the loss is zero up to rounding.
    EXPECT_TRUE(std::any_of(qs.begin(), qs.end(),
                            [&](const UnitQuaternion& q) { return pose_loss(q, 1, pose, 1, 3) < 1e-12; }));
    for (std::size_t a = 0; a < qs.size(); ++a) {
      for (std::size_t b = a + 1; b < qs.size(); ++b) EXPECT_GT(rotation_loss(qs[a], qs[b]), 1.5);
    }
  }
}

TEST(SymmetrySet, CupHandleFacingCameraIsSingleton) {
  const ToyObject cup = make_object(ObjectKind::kCup);
  const Eigen::Matrix3d pose = Eigen::AngleAxisd(kPi / 2, Eigen::Vector3d::UnitY()).toRotationMatrix();
  ASSERT_NEAR(((pose * cup.feature) - Eigen::Vector3d(0, 0, -1)).norm(), 0.0, 1e-12);
  const SymmetrySet set = symmetry_set(cup, pose);
  EXPECT_FALSE(set.is_arc());
  EXPECT_EQ(set.members.size(), 1u);
  EXPECT_FALSE(set.ambiguous());
}

TEST(SymmetrySet, CupHandleAwayIsArc) {
  const ToyObject cup = make_object(ObjectKind::kCup);
  const Eigen::Matrix3d pose = Eigen::AngleAxisd(-kPi / 2, Eigen::Vector3d::UnitY()).toRotationMatrix();
  ASSERT_NEAR(((pose * cup.feature) - Eigen::Vector3d(0, 0, 1)).norm(), 0.0, 1e-12);
  const SymmetrySet set = symmetry_set(cup, pose);
  ASSERT_TRUE(set.is_arc());
  // The handle orbit lies in the y-z plane; its camera z is cos(theta).
  EXPECT_NEAR(set.arc_end - set.arc_begin, 2.0 * std::acos(cup.visibility_threshold), 1e-12);
}

TEST(SymmetrySet, ArcMatchesVisibilityRule) {
  const ToyObject cup = make_object(ObjectKind::kCup);
  std::mt19937_64 rng(2);
  int arcs = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Matrix3d pose = to_matrix(random_quat(rng));
    const SymmetrySet set = symmetry_set(cup, pose);
    if (!set.is_arc()) {
      EXPECT_FALSE(hidden_at(cup, pose, 0.0));
      continue;
    }
    ++arcs;
    EXPECT_TRUE(hidden_at(cup, pose, 0.0));
    const double mid = 0.5 * (set.arc_begin + set.arc_end);
    const double half = 0.5 * (set.arc_end - set.arc_begin);
    for (int k = 0; k < 360; ++k) {
      const double theta = -kPi + 2.0 * kPi * (k + 0.5) / 360.0;
      const double offset = std::remainder(theta - mid, 2.0 * kPi);
      if (std::abs(std::abs(offset) - half) < 1e-6) continue;
      EXPECT_EQ(hidden_at(cup, pose, theta), std::abs(offset) < half) << trial << " " << theta;
    }
  }
  EXPECT_GT(arcs, 50);
}

TEST(Observation, InvariantAcrossSymmetrySet) {
  const ToyObject cube = make_object(ObjectKind::kCube);
  const ToyObject cup = make_object(ObjectKind::kCup);
  const DepthRange range;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Matrix3d pose = to_matrix(random_quat(rng));
    const auto ref = canonical_observation(cube, pose, 1.2, range);
    for (const auto& m : symmetry_set(cube, pose).members) {
      EXPECT_EQ(canonical_observation(cube, m, 1.2, range), ref);
    }
    const SymmetrySet set = symmetry_set(cup, pose);
    if (!set.is_arc()) continue;
    const auto cref = canonical_observation(cup, pose, 0.9, range);
    for (int k = 0; k < 10; ++k) {
      const double theta = set.arc_begin + (set.arc_end - set.arc_begin) * (k + 0.5) / 10.0;
      EXPECT_LE(max_abs_diff(canonical_observation(cup, set.arc_member(theta), 0.9, range), cref), 1e-9);
    }
  }
}

TEST(Observation, DistinctSetsDiffer) {
  std::mt19937_64 rng(4);
  for (ObjectKind kind : {ObjectKind::kCube, ObjectKind::kCup}) {
    const ToyObject obj = make_object(kind);
    int checked = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      const Eigen::Matrix3d a = to_matrix(random_quat(rng));
      const Eigen::Matrix3d b = to_matrix(random_quat(rng));
      // Pairs in the same set are skipped; random draws essentially never are.
      const Eigen::Matrix3d ca = canonical_rotation(obj, a);
      const Eigen::Matrix3d cb = canonical_rotation(obj, b);
      if ((ca - cb).cwiseAbs().maxCoeff() < 1e-9) continue;
      ++checked;
      EXPECT_GT(max_abs_diff(canonical_observation(obj, a, 1.0, {}), canonical_observation(obj, b, 1.0, {})), 1e-6);
    }
    EXPECT_GT(checked, 9990);
  }
}

TEST(Observation, CanonicalMemberIsFixedPoint) {
  const ToyObject cube = make_object(ObjectKind::kCube);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Matrix3d pose = to_matrix(random_quat(rng));
    const Eigen::Matrix3d c = canonical_rotation(cube, pose);
    EXPECT_EQ(canonical_rotation(cube, c), c);
    EXPECT_EQ(canonical_observation(cube, c, 1.5, {}), canonical_observation(cube, pose, 1.5, {}));
  }
}

TEST(Dataset, CubeAlwaysAmbiguous) {
  const ToyObject cube = make_object(ObjectKind::kCube);
  DatasetConfig cfg;
  cfg.object = ObjectKind::kCube;
  cfg.n = 1000;
  const auto samples = sample_dataset(cube, cfg);
  ASSERT_EQ(samples.size(), 1000u);
  for (const auto& s : samples) {
    EXPECT_TRUE(s.ambiguous_gt);
    ASSERT_TRUE(s.gt_axis_camera.has_value());
    EXPECT_EQ(s.observation.size(), static_cast<std::size_t>(kObservationWidth));
    EXPECT_GE(s.gt_depth, cfg.depth_range.min);
    EXPECT_LE(s.gt_depth, cfg.depth_range.max);
  }
}

TEST(Dataset, CupAmbiguousFractionMatchesSolidAngle) {
  const ToyObject cup = make_object(ObjectKind::kCup);
  DatasetConfig cfg;
  cfg.object = ObjectKind::kCup;
  cfg.n = 4000;
  cfg.seed = 11;
  const auto samples = sample_dataset(cup, cfg);
  const double frac = static_cast<double>(std::count_if(samples.begin(), samples.end(),
                                                        [](const ToySample& s) { return s.ambiguous_gt; })) /
                      samples.size();
  // Monte Carlo over uniform rotations of the fraction with a hidden feature.
  std::mt19937_64 rng(12);
  int hidden = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) hidden += hidden_at(cup, to_matrix(random_quat(rng)), 0.0);
  const double mc = static_cast<double>(hidden) / n;
  EXPECT_GT(frac, 0.0);
  EXPECT_LT(frac, 1.0);
  EXPECT_NEAR(frac, mc, 4.0 * std::sqrt(mc * (1 - mc) / cfg.n));
}

TEST(Dataset, StoredObservationReencodes) {
  for (ObjectKind kind : {ObjectKind::kCube, ObjectKind::kCup}) {
    const ToyObject obj = make_object(kind);
    DatasetConfig cfg;
    cfg.object = kind;
    cfg.n = 300;
    cfg.noise_sigma = 0.0;
    for (const auto& s : sample_dataset(obj, cfg)) {
      const Eigen::Matrix3d gt = to_matrix(s.gt_rotation);
      const auto obs = canonical_observation(obj, gt, s.gt_depth, cfg.depth_range);
      EXPECT_EQ(obs, s.observation);
      const SymmetrySet set = symmetry_set(obj, gt);
      if (set.is_arc()) {
        for (double f : {0.01, 0.5, 0.99}) {
          const double theta = set.arc_begin + f * (set.arc_end - set.arc_begin);
          const auto other = canonical_observation(obj, set.arc_member(theta), s.gt_depth, cfg.depth_range);
          EXPECT_LE(max_abs_diff(other, s.observation), 1e-9);
        }
      } else {
        for (const auto& m : set.members) {
          EXPECT_EQ(canonical_observation(obj, m, s.gt_depth, cfg.depth_range), s.observation);
        }
      }
    }
  }
}

TEST(Dataset, Deterministic) {
  const ToyObject cup = make_object(ObjectKind::kCup);
  DatasetConfig cfg;
  cfg.object = ObjectKind::kCup;
  cfg.n = 200;
  cfg.seed = 77;
  const auto a = sample_dataset(cup, cfg);
  const auto b = sample_dataset(cup, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].observation, b[i].observation);
    EXPECT_EQ(a[i].gt_rotation, b[i].gt_rotation);
    EXPECT_EQ(a[i].gt_depth, b[i].gt_depth);
    EXPECT_EQ(a[i].bbox_center, b[i].bbox_center);
  }
  EXPECT_EQ(sample_one(cup, cfg, 57).observation, a[57].observation);
}

TEST(Camera, Backproject) {
  const PinholeCamera cam;
  EXPECT_EQ(backproject(cam, cam.cx, cam.cy, 1.0), Eigen::Vector3d(0, 0, 1));
  EXPECT_NEAR((backproject(cam, cam.cx + cam.fx, cam.cy, 2.0) - Eigen::Vector3d(2, 0, 2)).norm(), 0.0, 1e-12);
  try {
    backproject(cam, 100, 100, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonPositiveDepth);
  }
}

TEST(Camera, ProjectBackprojectIdentity) {
  const PinholeCamera cam;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-0.5, 0.5), z(0.3, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d t(u(rng), u(rng), z(rng));
    const Eigen::Vector3d uvz = project(cam, t);
    EXPECT_LE((backproject(cam, uvz.x(), uvz.y(), uvz.z()) - t).norm(), 1e-9);
  }
}

}  // namespace
}  // namespace posekit
