#include "posekit/pipeline.hpp"

#include <algorithm>

#include <numbers>

#include "posekit/errors.hpp"

namespace posekit {

std::string to_string(ClusterSelection rule) {
  return rule == ClusterSelection::kLargestMembership ? "largest-membership"
                                                      : "lowest-dispersion";
}

ClusterSelection parse_cluster_selection(const std::string& name) {
  if (name == "largest-membership") return ClusterSelection::kLargestMembership;
  if (name == "lowest-dispersion") return ClusterSelection::kLowestDispersion;
  throw Error(ErrorCode::kInvalidArgument, "unknown cluster selection rule '" + name + "'");
}

double default_bandwidth(ObjectKind kind) {
  return kind == ObjectKind::kCylinder ? std::numbers::pi / 2.0 : std::numbers::pi / 4.0;
}

int select_cluster(std::span<const int> member_counts, std::span<const double> dispersions,
                   ClusterSelection rule) {
  if (member_counts.empty()) throw Error(ErrorCode::kEmptyInput, "no clusters to select from");
  int best = 0;
  for (std::size_t k = 1; k < member_counts.size(); ++k) {
    const auto b = static_cast<std::size_t>(best);
    bool better = false;
    if (rule == ClusterSelection::kLargestMembership) {
      better = member_counts[k] > member_counts[b];
    } else {
      if (dispersions.size() != member_counts.size()) {
        throw Error(ErrorCode::kWidthMismatch, "one dispersion per cluster is required");
      }
      better = dispersions[k] < dispersions[b] ||
               (dispersions[k] == dispersions[b] && member_counts[k] > member_counts[b]);
    }
    if (better) best = static_cast<int>(k);
  }
  return best;
}

InferenceResult infer(const HypothesisSet& hyps, const PinholeCamera& camera,
                      const std::array<double, 2>& bbox_center, const InferenceConfig& config) {
  if (hyps.size() < 2) {
    throw Error(ErrorCode::kInsufficientHypotheses, "inference needs at least two hypotheses");
  }
  if (hyps.depths.size() != hyps.rotations.size()) {
    throw Error(ErrorCode::kWidthMismatch, "rotation and depth counts differ");
  }
  if (!(config.meanshift_bandwidth > 0.0) || !(config.pca_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bandwidth and threshold must be positive");
  }
  const std::vector<UnitQuaternion> rotations = hemisphere_all(hyps.rotations);
  const int m = static_cast<int>(rotations.size());

  InferenceResult out;
  out.threshold_used = config.scale_threshold
                           ? scaled_ambiguity_threshold(config.pca_threshold, m)
                           : config.pca_threshold;
  out.ambiguity = analyze_ambiguity(rotations, out.threshold_used, config.singular_value_index);
  out.confidence_sigma = dispersion(rotations).sigma;

  if (!out.ambiguity.ambiguous) {
    out.pose.rotation =
        weiszfeld_median(rotations, config.weiszfeld_tol, config.weiszfeld_max_iter).median;
    out.depth = median_scalar(hyps.depths);
  } else {
    ClusterSet clusters = mean_shift(rotations, config.meanshift_bandwidth);
    std::vector<double> sigmas;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      std::vector<UnitQuaternion> member_rot;
      std::vector<double> member_depth;
      for (int i = 0; i < m; ++i) {
        if (clusters.assignments[static_cast<std::size_t>(i)] != static_cast<int>(k)) continue;
        member_rot.push_back(rotations[static_cast<std::size_t>(i)]);
        member_depth.push_back(hyps.depths[static_cast<std::size_t>(i)]);
      }
      if (member_rot.empty()) throw Error(ErrorCode::kEmptyInput, "empty cluster after merge");
      FusedCluster f;
      f.rotation =
          weiszfeld_median(member_rot, config.weiszfeld_tol, config.weiszfeld_max_iter).median;
      f.depth = median_scalar(member_depth);
      f.members = static_cast<int>(member_rot.size());
      f.dispersion = dispersion(member_rot).sigma;
      sigmas.push_back(f.dispersion);
      out.fused.push_back(f);
    }
    out.selected = select_cluster(clusters.member_counts, sigmas, config.cluster_selection);
    out.pose.rotation = out.fused[static_cast<std::size_t>(out.selected)].rotation;
    out.depth = out.fused[static_cast<std::size_t>(out.selected)].depth;
    out.clusters = std::move(clusters);
  }
  out.depth = std::max(out.depth, config.min_depth);
  out.pose.translation = backproject(camera, bbox_center[0], bbox_center[1], out.depth);
  return out;
}

}  // namespace posekit
