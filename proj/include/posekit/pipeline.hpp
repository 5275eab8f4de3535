#pragma once
/**
 * @file pipeline.hpp
 * @brief Pose inference from a hypothesis set: ambiguity test, clustering of
 * ambiguous sets, robust fusion and back-projection.
 */

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posekit/ambiguity.hpp"
#include "posekit/metrics.hpp"
#include "posekit/mhp_model.hpp"
#include "posekit/robust_stats.hpp"
#include "posekit/toy_world.hpp"

namespace posekit {

enum class ClusterSelection { kLargestMembership, kLowestDispersion };

std::string to_string(ClusterSelection rule);
ClusterSelection parse_cluster_selection(const std::string& name);

/// Mean shift bandwidth per object, radians.
double default_bandwidth(ObjectKind kind);

struct InferenceConfig {
  double pca_threshold = kDefaultAmbiguityThreshold;
  /// Rescale pca_threshold by sqrt(M / 30) for M hypotheses.
  bool scale_threshold = true;
  int singular_value_index = 2;
  double meanshift_bandwidth = default_bandwidth(ObjectKind::kCube);
  double weiszfeld_tol = 1e-10;
  int weiszfeld_max_iter = 500;
  ClusterSelection cluster_selection = ClusterSelection::kLargestMembership;
  /// Fused depths below this (meters) are raised to it before back-projection.
  double min_depth = 1e-3;
};

struct FusedCluster {
  UnitQuaternion rotation;
  double depth = 0.0;
  int members = 0;
  double dispersion = 0.0;  ///< radians
};

struct InferenceResult {
  PoseEstimate pose;
  double depth = 0.0;
  double threshold_used = 0.0;
  AmbiguityReport ambiguity;
  std::optional<ClusterSet> clusters;
  std::vector<FusedCluster> fused;
  int selected = -1;
  double confidence_sigma = 0.0;  ///< radians
};

/// Largest membership: most members, lowest index on ties.
/// Lowest dispersion: smallest sigma, then most members, then lowest index.
int select_cluster(std::span<const int> member_counts, std::span<const double> dispersions,
                   ClusterSelection rule);

InferenceResult infer(const HypothesisSet& hyps, const PinholeCamera& camera,
                      const std::array<double, 2>& bbox_center, const InferenceConfig& config);

}  // namespace posekit
