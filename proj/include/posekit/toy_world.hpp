#pragma once
/**
 * @file toy_world.hpp
 * @brief Synthetic symmetric objects and a rendering-free observation model.
 *
 * An observation encodes the canonical member of the pose's symmetry set, so
 * every pose in the set produces the same vector. Three objects are provided:
 *  - cube: four-fold symmetry group about the object z axis, every view ambiguous;
 *  - cup: a body symmetric about z with a handle along +x, ambiguous only while
 *    the handle is hidden behind the body;
 *  - cylinder: continuous symmetry about z, every view ambiguous.
 */

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "posekit/rotation.hpp"

namespace posekit {

enum class ObjectKind { kCube, kCup, kCylinder };

enum class SymmetryKind {
  kFiniteGroup,         ///< global finite group
  kViewConditionalArc,  ///< arc about the axis while a feature is hidden
  kContinuousAxis,      ///< full circle about the axis
};

std::string to_string(ObjectKind kind);
/// Throws kInvalidArgument on unknown names.
ObjectKind parse_object_kind(const std::string& name);

struct ToyObject {
  ObjectKind kind = ObjectKind::kCube;
  std::string id;
  std::vector<Eigen::Vector3d> model_points;
  double diameter = 0.0;
  SymmetryKind symmetry = SymmetryKind::kFiniteGroup;
  /// Finite group as exact signed permutation matrices, identity first.
  std::vector<Eigen::Matrix3d> group;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();     ///< object frame
  Eigen::Vector3d feature = Eigen::Vector3d::UnitX();  ///< occluding feature direction
  double visibility_threshold = 0.3;                   ///< tau_occ

  std::vector<UnitQuaternion> group_quaternions() const;
};

ToyObject make_object(ObjectKind kind);

/// Maximum pairwise distance.
double point_set_diameter(const std::vector<Eigen::Vector3d>& points);

struct PinholeCamera {
  double fx = 572.4114;
  double fy = 573.57043;
  double cx = 325.2611;
  double cy = 242.04899;
};

/// t = ((u - cx) Z / fx, (v - cy) Z / fy, Z). Throws for Z <= 0.
Eigen::Vector3d backproject(const PinholeCamera& camera, double u, double v, double Z);
/// Inverse of backproject: (u, v, Z).
Eigen::Vector3d project(const PinholeCamera& camera, const Eigen::Vector3d& t);

struct SymmetrySet {
  SymmetryKind kind = SymmetryKind::kFiniteGroup;
  /// Finite members (a singleton when the feature is visible); empty for arcs.
  std::vector<Eigen::Matrix3d> members;
  /// Arc members are pose * Rot_axis(theta) for theta in (arc_begin, arc_end).
  Eigen::Matrix3d base = Eigen::Matrix3d::Identity();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double arc_begin = 0.0;
  double arc_end = 0.0;

  bool is_arc() const { return members.empty(); }
  bool ambiguous() const { return is_arc() || members.size() > 1; }
  Eigen::Matrix3d arc_member(double theta) const;
  std::vector<UnitQuaternion> quaternions() const;
};

SymmetrySet symmetry_set(const ToyObject& obj, const Eigen::Matrix3d& pose);
SymmetrySet symmetry_set(const ToyObject& obj, const UnitQuaternion& pose);

/// Canonical representative of the pose's symmetry set.
Eigen::Matrix3d canonical_rotation(const ToyObject& obj, const Eigen::Matrix3d& pose);

struct DepthRange {
  double min = 0.5;
  double max = 2.0;
};

inline constexpr int kObservationWidth = 10;

/// 9 row-major entries of the canonical rotation, depth scaled to [0, 1] over
/// `range`, plus N(0, noise_sigma) per entry when rng is given.
std::vector<double> canonical_observation(const ToyObject& obj, const Eigen::Matrix3d& pose,
                                          double depth, const DepthRange& range,
                                          double noise_sigma = 0.0,
                                          std::mt19937_64* rng = nullptr);

struct ToySample {
  std::vector<double> observation;
  UnitQuaternion gt_rotation;
  double gt_depth = 0.0;
  std::array<double, 2> bbox_center{0.0, 0.0};
  PinholeCamera intrinsics;
  bool ambiguous_gt = false;
  std::optional<Eigen::Vector3d> gt_axis_camera;

  Eigen::Vector3d gt_translation() const;
};

struct DatasetConfig {
  ObjectKind object = ObjectKind::kCube;
  int n = 1000;
  PinholeCamera camera;
  DepthRange depth_range;
  double noise_sigma = 0.002;
  std::uint64_t seed = 1;
  /// Half extents of the region around the principal point holding bbox centres.
  double center_half_width = 120.0;
  double center_half_height = 90.0;
};

/// Sample `index` of the dataset; randomness derives from (seed, index) only.
ToySample sample_one(const ToyObject& obj, const DatasetConfig& config, std::uint64_t index);
std::vector<ToySample> sample_dataset(const ToyObject& obj, const DatasetConfig& config);

}  // namespace posekit
