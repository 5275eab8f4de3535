#pragma once

#include <optional>
#include <span>

#include <Eigen/Core>

#include "posekit/rotation.hpp"

namespace posekit {

/// Default sigma threshold, calibrated for 30 hypotheses. Singular values of the
/// centred M x 4 matrix grow like sqrt(M) for a fixed angular spread.
inline constexpr double kDefaultAmbiguityThreshold = 0.8;
inline constexpr int kThresholdReferenceCount = 30;

/// Scales a threshold calibrated at `reference` hypotheses to `count` hypotheses.
double scaled_ambiguity_threshold(double threshold, int count,
                                  int reference = kThresholdReferenceCount);

struct AmbiguityDecision {
  bool ambiguous = false;
  Eigen::Vector4d singular_values = Eigen::Vector4d::Zero();  ///< descending
};

/// PCA test: ambiguous iff the `index`-th largest singular value (1-based,
/// default the second) of the centred, hemisphere-aligned hypothesis matrix
/// exceeds `threshold`.
AmbiguityDecision detect_ambiguity(std::span<const UnitQuaternion> quats,
                                   double threshold = kDefaultAmbiguityThreshold,
                                   int index = 2);

struct AxisEstimate {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double residual = 0.0;  ///< smallest singular value of A^T
  bool degenerate = false;
  Eigen::Vector3d singular_values = Eigen::Vector3d::Zero();  ///< of A^T, descending
  int used_axes = 0;
};

/// Solves min ||A^T s||_2 over unit s, with A stacking the rotation axes of the
/// non-identity hypotheses as columns.
AxisEstimate estimate_axis(std::span<const UnitQuaternion> quats);

/// Angle in degrees between two undirected axes, in [0, 90].
double axis_deviation(const RotationAxis& estimated, const RotationAxis& ground_truth);

struct AmbiguityReport {
  Eigen::Vector4d singular_values = Eigen::Vector4d::Zero();
  bool ambiguous = false;
  std::optional<RotationAxis> axis;
  double axis_residual = 0.0;
  bool degenerate_axis = false;
};

/// detect_ambiguity followed, when ambiguous, by estimate_axis. Too few usable
/// axes is reported as a degenerate axis rather than an error.
AmbiguityReport analyze_ambiguity(std::span<const UnitQuaternion> quats,
                                  double threshold = kDefaultAmbiguityThreshold,
                                  int index = 2);

}  // namespace posekit
