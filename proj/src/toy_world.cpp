#include "posekit/toy_world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "posekit/errors.hpp"

namespace posekit {

namespace {

constexpr double kCubeEdge = 0.1;
constexpr double kCupHeight = 0.12;
constexpr double kCupRadius = 0.04;
constexpr int kCupRings = 4;
constexpr int kCupSegments = 16;

std::vector<Eigen::Vector3d> cylinder_points() {
  std::vector<Eigen::Vector3d> pts;
  for (int ring = 0; ring < kCupRings; ++ring) {
    const double z = -0.5 * kCupHeight + kCupHeight * ring / (kCupRings - 1);
    for (int s = 0; s < kCupSegments; ++s) {
      const double phi = 2.0 * std::numbers::pi * s / kCupSegments;
      pts.emplace_back(kCupRadius * std::cos(phi), kCupRadius * std::sin(phi), z);
    }
  }
  return pts;
}

Eigen::Matrix3d z_quarter_turns(int k) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(2, 2) = 1.0;
  switch (k % 4) {
    case 0: m(0, 0) = 1.0; m(1, 1) = 1.0; break;
    case 1: m(0, 1) = -1.0; m(1, 0) = 1.0; break;
    case 2: m(0, 0) = -1.0; m(1, 1) = -1.0; break;
    default: m(0, 1) = 1.0; m(1, 0) = -1.0; break;
  }
  return m;
}

bool lex_greater(const UnitQuaternion& a, const UnitQuaternion& b) {
  for (int i = 0; i < 4; ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

// Unit vector perpendicular to the camera-frame axis a, pointing as far along
// +z_cam as possible. Falls back to +x_cam when a is parallel to z_cam.
Eigen::Vector3d away_direction(const Eigen::Vector3d& a, double* rho = nullptr) {
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d c = z - z.dot(a) * a;
  const double n = c.norm();
  if (rho != nullptr) *rho = n;
  if (n < 1e-9) {
    const Eigen::Vector3d x = Eigen::Vector3d::UnitX();
    c = x - x.dot(a) * a;
    return c.normalized();
  }
  return c / n;
}

Eigen::Matrix3d frame_from_axis(const Eigen::Vector3d& a) {
  const Eigen::Vector3d c1 = away_direction(a);
  Eigen::Matrix3d r;
  r.col(0) = c1;
  r.col(1) = a.cross(c1);
  r.col(2) = a;
  return r;
}

bool feature_hidden(const ToyObject& obj, const Eigen::Matrix3d& pose) {
  return (pose * obj.feature).z() > obj.visibility_threshold;
}

}  // namespace

std::string to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::kCube: return "cube";
    case ObjectKind::kCup: return "cup";
    case ObjectKind::kCylinder: return "cylinder";
  }
  return "unknown";
}

ObjectKind parse_object_kind(const std::string& name) {
  if (name == "cube") return ObjectKind::kCube;
  if (name == "cup") return ObjectKind::kCup;
  if (name == "cylinder") return ObjectKind::kCylinder;
  throw Error(ErrorCode::kInvalidArgument, "unknown object '" + name + "'");
}

std::vector<UnitQuaternion> ToyObject::group_quaternions() const {
  std::vector<UnitQuaternion> out;
  out.reserve(group.size());
  for (const auto& g : group) out.push_back(from_matrix(g));
  return out;
}

double point_set_diameter(const std::vector<Eigen::Vector3d>& points) {
  double d = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      d = std::max(d, (points[i] - points[j]).norm());
    }
  }
  return d;
}

ToyObject make_object(ObjectKind kind) {
  ToyObject obj;
  obj.kind = kind;
  obj.id = to_string(kind);
  switch (kind) {
    case ObjectKind::kCube: {
      const double h = 0.5 * kCubeEdge;
      for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
          for (int k = -1; k <= 1; ++k) {
            if (i == 0 && j == 0 && k == 0) continue;
            obj.model_points.emplace_back(h * i, h * j, h * k);
          }
        }
      }
      obj.symmetry = SymmetryKind::kFiniteGroup;
      for (int k = 0; k < 4; ++k) obj.group.push_back(z_quarter_turns(k));
      break;
    }
    case ObjectKind::kCup:
      obj.model_points = cylinder_points();
      obj.model_points.emplace_back(1.5 * kCupRadius, 0.0, 0.0);
      obj.symmetry = SymmetryKind::kViewConditionalArc;
      break;
    case ObjectKind::kCylinder:
      obj.model_points = cylinder_points();
      obj.symmetry = SymmetryKind::kContinuousAxis;
      break;
  }
  obj.diameter = point_set_diameter(obj.model_points);
  return obj;
}

Eigen::Vector3d backproject(const PinholeCamera& camera, double u, double v, double Z) {
  if (!(Z > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "back-projection needs a positive depth");
  }
  return {(u - camera.cx) * Z / camera.fx, (v - camera.cy) * Z / camera.fy, Z};
}

Eigen::Vector3d project(const PinholeCamera& camera, const Eigen::Vector3d& t) {
  if (!(t.z() > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "projection needs a point in front of the camera");
  }
  return {camera.fx * t.x() / t.z() + camera.cx, camera.fy * t.y() / t.z() + camera.cy, t.z()};
}

Eigen::Matrix3d SymmetrySet::arc_member(double theta) const {
  return base * Eigen::AngleAxisd(theta, axis).toRotationMatrix();
}

std::vector<UnitQuaternion> SymmetrySet::quaternions() const {
  std::vector<UnitQuaternion> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(from_matrix(m));
  return out;
}

SymmetrySet symmetry_set(const ToyObject& obj, const Eigen::Matrix3d& pose) {
  SymmetrySet set;
  set.kind = obj.symmetry;
  set.base = pose;
  set.axis = obj.axis;
  switch (obj.symmetry) {
    case SymmetryKind::kFiniteGroup:
      for (const auto& g : obj.group) set.members.push_back(pose * g);
      break;
    case SymmetryKind::kContinuousAxis:
      set.arc_begin = 0.0;
      set.arc_end = 2.0 * std::numbers::pi;
      break;
    case SymmetryKind::kViewConditionalArc: {
      if (!feature_hidden(obj, pose)) {
        set.members.push_back(pose);
        break;
      }
      const Eigen::Vector3d a = pose * obj.axis;
      double rho = 0.0;
      const Eigen::Vector3d c1 = away_direction(a, &rho);
      // The feature's camera z along the orbit is rho cos(theta - theta0).
      const Eigen::Vector3d local = pose.transpose() * c1;
      const double theta0 = std::atan2(local.y(), local.x());
      const double half = std::acos(std::min(1.0, obj.visibility_threshold / rho));
      set.arc_begin = theta0 - half;
      set.arc_end = theta0 + half;
      break;
    }
  }
  return set;
}

SymmetrySet symmetry_set(const ToyObject& obj, const UnitQuaternion& pose) {
  return symmetry_set(obj, to_matrix(pose));
}

Eigen::Matrix3d canonical_rotation(const ToyObject& obj, const Eigen::Matrix3d& pose) {
  switch (obj.symmetry) {
    case SymmetryKind::kFiniteGroup: {
      Eigen::Matrix3d best = pose * obj.group.front();
      UnitQuaternion best_q = from_matrix(best);
      for (std::size_t k = 1; k < obj.group.size(); ++k) {
        const Eigen::Matrix3d m = pose * obj.group[k];
        const UnitQuaternion q = from_matrix(m);
        if (lex_greater(q, best_q)) {
          best = m;
          best_q = q;
        }
      }
      return best;
    }
    case SymmetryKind::kViewConditionalArc:
      if (!feature_hidden(obj, pose)) return pose;
      return frame_from_axis(pose * obj.axis);
    case SymmetryKind::kContinuousAxis:
      return frame_from_axis(pose * obj.axis);
  }
  return pose;
}

std::vector<double> canonical_observation(const ToyObject& obj, const Eigen::Matrix3d& pose,
                                          double depth, const DepthRange& range,
                                          double noise_sigma, std::mt19937_64* rng) {
  const Eigen::Matrix3d c = canonical_rotation(obj, pose);
  std::vector<double> obs;
  obs.reserve(kObservationWidth);
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) obs.push_back(c(r, k));
  }
  obs.push_back((depth - range.min) / (range.max - range.min));
  if (rng != nullptr && noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : obs) v += noise(*rng);
  }
  return obs;
}

Eigen::Vector3d ToySample::gt_translation() const {
  return backproject(intrinsics, bbox_center[0], bbox_center[1], gt_depth);
}

ToySample sample_one(const ToyObject& obj, const DatasetConfig& config, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::Vector4d g;
  for (int i = 0; i < 4; ++i) g[i] = normal(rng);
  const Eigen::Matrix3d pose = to_matrix(from_gaussian(g));

  ToySample s;
  s.intrinsics = config.camera;
  s.gt_depth = config.depth_range.min + (config.depth_range.max - config.depth_range.min) * unif(rng);
  s.bbox_center[0] = config.camera.cx + config.center_half_width * (2.0 * unif(rng) - 1.0);
  s.bbox_center[1] = config.camera.cy + config.center_half_height * (2.0 * unif(rng) - 1.0);

  // Single ground-truth label: one member of the symmetry set, drawn uniformly.
  const SymmetrySet set = symmetry_set(obj, pose);
  Eigen::Matrix3d gt;
  if (set.is_arc()) {
    gt = set.arc_member(set.arc_begin + (set.arc_end - set.arc_begin) * unif(rng));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, set.members.size() - 1);
    gt = set.members[pick(rng)];
  }
  s.gt_rotation = from_matrix(gt);
  const Eigen::Matrix3d gt_matrix = to_matrix(s.gt_rotation);

  // Ambiguity and observation are derived from the stored label so re-encoding
  // any member of its set reproduces the observation.
  s.ambiguous_gt = symmetry_set(obj, gt_matrix).ambiguous();
  if (s.ambiguous_gt) s.gt_axis_camera = gt_matrix * obj.axis;
  s.observation = canonical_observation(obj, gt_matrix, s.gt_depth, config.depth_range,
                                        config.noise_sigma, &rng);
  return s;
}

std::vector<ToySample> sample_dataset(const ToyObject& obj, const DatasetConfig& config) {
  if (config.n <= 0) throw Error(ErrorCode::kInvalidArgument, "dataset size must be positive");
  if (!(config.depth_range.max > config.depth_range.min) || !(config.depth_range.min > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "depth range must be positive and non-empty");
  }
  std::vector<ToySample> out;
  out.reserve(static_cast<std::size_t>(config.n));
  for (int i = 0; i < config.n; ++i) out.push_back(sample_one(obj, config, static_cast<std::uint64_t>(i)));
  return out;
}

}  // namespace posekit
