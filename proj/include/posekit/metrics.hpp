#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "posekit/rotation.hpp"

namespace posekit {

struct PoseEstimate {
  UnitQuaternion rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  ///< meters
};

/// Pass threshold as a fraction of the object diameter.
inline constexpr double kPoseDiameterFraction = 0.1;

/// Mean distance between corresponding transformed model points.
double add_error(std::span<const Eigen::Vector3d> points, const PoseEstimate& est,
                 const PoseEstimate& gt);
/// Mean distance from each gt-transformed point to the closest est-transformed point.
double adi_error(std::span<const Eigen::Vector3d> points, const PoseEstimate& est,
                 const PoseEstimate& gt);
bool add_pass(std::span<const Eigen::Vector3d> points, const PoseEstimate& est,
              const PoseEstimate& gt, double diameter);
bool adi_pass(std::span<const Eigen::Vector3d> points, const PoseEstimate& est,
              const PoseEstimate& gt, double diameter);

double rotation_error_deg(const PoseEstimate& est, const PoseEstimate& gt);
double translation_error_mm(const PoseEstimate& est, const PoseEstimate& gt);

struct SampleRecord {
  double add_err = 0.0;  ///< meters
  double adi_err = 0.0;  ///< meters
  bool add_pass = false;
  bool adi_pass = false;
  double rot_err_deg = 0.0;
  double trans_err_mm = 0.0;
  bool ambiguous_pred = false;
  bool ambiguous_gt = false;
  std::optional<double> axis_dev_deg;
  double confidence_sigma = 0.0;  ///< radians
};

struct AmbiguityScores {
  std::optional<double> acc_unambiguous;
  std::optional<double> acc_ambiguous;
  /// Over ambiguous views detected as ambiguous that carry an axis deviation.
  std::optional<double> mean_axis_dev;
};

AmbiguityScores ambiguity_scores(std::span<const SampleRecord> records);

struct ConfidenceBin {
  double upper = 0.0;  ///< sigma < upper, radians; infinity for the unfiltered bin
  int count = 0;
  std::optional<double> mean_rot_err_deg;
};

/// Cumulative sigma filters {<0.05, <0.075, <0.10, <0.15, <inf}.
std::vector<double> default_confidence_bins();
std::vector<ConfidenceBin> confidence_table(std::span<const SampleRecord> records,
                                            const std::vector<double>& uppers);

struct EvalAggregates {
  int count = 0;
  double add_acc = 0.0;
  double adi_acc = 0.0;
  double mean_add_err = 0.0;
  double mean_adi_err = 0.0;
  double mean_rot_err_deg = 0.0;
  double mean_trans_err_mm = 0.0;
  AmbiguityScores ambiguity;
};

EvalAggregates aggregate(std::span<const SampleRecord> records);

}  // namespace posekit
