#include "posekit/ambiguity.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <vector>

#include "posekit/errors.hpp"

namespace posekit {

double scaled_ambiguity_threshold(double threshold, int count, int reference) {
  return threshold * std::sqrt(static_cast<double>(count) / reference);
}

AmbiguityDecision detect_ambiguity(std::span<const UnitQuaternion> quats,
                                   double threshold, int index) {
  if (quats.size() < 2) {
    throw Error(ErrorCode::kInsufficientHypotheses,
                "ambiguity detection needs at least two hypotheses");
  }
  if (index < 1 || index > 4) {
    throw Error(ErrorCode::kInvalidArgument, "singular value index must be in 1..4");
  }
  const auto n = static_cast<Eigen::Index>(quats.size());
  Eigen::MatrixXd data(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.row(i) = to_hemisphere(quats[static_cast<std::size_t>(i)]).coeffs().transpose();
  }
  data.rowwise() -= data.colwise().mean();

  AmbiguityDecision out;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(data).singularValues();
  out.singular_values.head(sv.size()) = sv;
  out.ambiguous = out.singular_values[index - 1] > threshold;
  return out;
}

AxisEstimate estimate_axis(std::span<const UnitQuaternion> quats) {
  std::vector<Eigen::Vector3d> axes;
  axes.reserve(quats.size());
  for (const auto& q : quats) {
    const Eigen::Vector3d v = q.vec();
    const double n = v.norm();
    if (n >= kAxisEpsilon) axes.push_back(v / n);
  }
  if (axes.size() < 3) {
    throw Error(ErrorCode::kInsufficientAxes,
                "axis estimation needs at least three non-identity hypotheses");
  }

  Eigen::MatrixXd At(static_cast<Eigen::Index>(axes.size()), 3);
  for (std::size_t i = 0; i < axes.size(); ++i) {
    At.row(static_cast<Eigen::Index>(i)) = axes[i].transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(At, Eigen::ComputeFullV);

  AxisEstimate out;
  out.used_axes = static_cast<int>(axes.size());
  out.singular_values = svd.singularValues();
  out.residual = out.singular_values[2];
  // A two-dimensional null space (nearly collinear axes) leaves s undetermined.
  out.degenerate = out.singular_values[1] < 1e-3 * out.singular_values[0];
  Eigen::Vector3d s = svd.matrixV().col(2).normalized();
  for (int i = 0; i < 3; ++i) {
    if (s[i] != 0.0) {
      if (s[i] < 0.0) s = -s;
      break;
    }
  }
  out.axis = s;
  return out;
}

double axis_deviation(const RotationAxis& estimated, const RotationAxis& ground_truth) {
  const Eigen::Vector3d& a = estimated.vector();
  const Eigen::Vector3d& b = ground_truth.vector();
  return rad_to_deg(std::atan2(a.cross(b).norm(), std::abs(a.dot(b))));
}

AmbiguityReport analyze_ambiguity(std::span<const UnitQuaternion> quats,
                                  double threshold, int index) {
  const AmbiguityDecision decision = detect_ambiguity(quats, threshold, index);
  AmbiguityReport report;
  report.singular_values = decision.singular_values;
  report.ambiguous = decision.ambiguous;
  if (!report.ambiguous) return report;
  try {
    const std::vector<UnitQuaternion> aligned = hemisphere_all(quats);
    const AxisEstimate est = estimate_axis(aligned);
    report.axis_residual = est.residual;
    report.degenerate_axis = est.degenerate;
    if (!est.degenerate) report.axis = RotationAxis(est.axis);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientAxes) throw;
    report.degenerate_axis = true;
  }
  return report;
}

}  // namespace posekit
