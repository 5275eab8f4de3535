#include "posekit/metrics.hpp"

#include <cmath>
#include <limits>

#include "posekit/errors.hpp"

namespace posekit {

namespace {

std::vector<Eigen::Vector3d> transform(std::span<const Eigen::Vector3d> points,
                                       const PoseEstimate& pose) {
  const Eigen::Matrix3d r = to_matrix(pose.rotation);
  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(r * p + pose.translation);
  return out;
}

void require_points(std::span<const Eigen::Vector3d> points) {
  if (points.empty()) throw Error(ErrorCode::kEmptyPointSet, "model point set is empty");
}

}  // namespace

double add_error(std::span<const Eigen::Vector3d> points, const PoseEstimate& est,
                 const PoseEstimate& gt) {
  require_points(points);
  const auto a = transform(points, est);
  const auto b = transform(points, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]).norm();
  return sum / static_cast<double>(a.size());
}

double adi_error(std::span<const Eigen::Vector3d> points, const PoseEstimate& est,
                 const PoseEstimate& gt) {
  require_points(points);
  const auto a = transform(points, est);
  const auto b = transform(points, gt);
  double sum = 0.0;
  for (const auto& g : b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : a) best = std::min(best, (g - e).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(b.size());
}

bool add_pass(std::span<const Eigen::Vector3d> points, const PoseEstimate& est,
              const PoseEstimate& gt, double diameter) {
  return add_error(points, est, gt) < kPoseDiameterFraction * diameter;
}

bool adi_pass(std::span<const Eigen::Vector3d> points, const PoseEstimate& est,
              const PoseEstimate& gt, double diameter) {
  return adi_error(points, est, gt) < kPoseDiameterFraction * diameter;
}

double rotation_error_deg(const PoseEstimate& est, const PoseEstimate& gt) {
  return rad_to_deg(rotation_loss(est.rotation, gt.rotation));
}

double translation_error_mm(const PoseEstimate& est, const PoseEstimate& gt) {
  return 1000.0 * (est.translation - gt.translation).norm();
}

AmbiguityScores ambiguity_scores(std::span<const SampleRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "no records to score");
  int unamb = 0, unamb_ok = 0, amb = 0, amb_ok = 0, axis_n = 0;
  double axis_sum = 0.0;
  for (const auto& r : records) {
    if (r.ambiguous_gt) {
      ++amb;
      if (r.ambiguous_pred) {
        ++amb_ok;
        if (r.axis_dev_deg) {
          ++axis_n;
          axis_sum += *r.axis_dev_deg;
        }
      }
    } else {
      ++unamb;
      if (!r.ambiguous_pred) ++unamb_ok;
    }
  }
  AmbiguityScores s;
  if (unamb > 0) s.acc_unambiguous = static_cast<double>(unamb_ok) / unamb;
  if (amb > 0) s.acc_ambiguous = static_cast<double>(amb_ok) / amb;
  if (axis_n > 0) s.mean_axis_dev = axis_sum / axis_n;
  return s;
}

std::vector<double> default_confidence_bins() {
  return {0.05, 0.075, 0.10, 0.15, std::numeric_limits<double>::infinity()};
}

std::vector<ConfidenceBin> confidence_table(std::span<const SampleRecord> records,
                                            const std::vector<double>& uppers) {
  std::vector<ConfidenceBin> table;
  for (double upper : uppers) {
    ConfidenceBin bin;
    bin.upper = upper;
    double sum = 0.0;
    for (const auto& r : records) {
      if (r.confidence_sigma < upper) {
        ++bin.count;
        sum += r.rot_err_deg;
      }
    }
    if (bin.count > 0) bin.mean_rot_err_deg = sum / bin.count;
    table.push_back(bin);
  }
  return table;
}

EvalAggregates aggregate(std::span<const SampleRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "no records to aggregate");
  EvalAggregates a;
  a.count = static_cast<int>(records.size());
  for (const auto& r : records) {
    a.add_acc += r.add_pass ? 1.0 : 0.0;
    a.adi_acc += r.adi_pass ? 1.0 : 0.0;
    a.mean_add_err += r.add_err;
    a.mean_adi_err += r.adi_err;
    a.mean_rot_err_deg += r.rot_err_deg;
    a.mean_trans_err_mm += r.trans_err_mm;
  }
  const double n = a.count;
  a.add_acc /= n;
  a.adi_acc /= n;
  a.mean_add_err /= n;
  a.mean_adi_err /= n;
  a.mean_rot_err_deg /= n;
  a.mean_trans_err_mm /= n;
  a.ambiguity = ambiguity_scores(records);
  return a;
}

}  // namespace posekit
