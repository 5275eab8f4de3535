#pragma once

#include <span>
#include <vector>

#include "posekit/rotation.hpp"

namespace posekit {

struct WeiszfeldResult {
  UnitQuaternion median;
  int iterations = 0;
  /// False when max_iter was hit; median is then the best iterate seen.
  bool converged = true;
  /// Sum of geodesic distances, one entry per accepted iterate (initial first).
  std::vector<double> objective_trace;
};

/// Geodesic L1 median on S^3/{+-1} by Weiszfeld iterations in tangent spaces.
WeiszfeldResult weiszfeld_median(std::span<const UnitQuaternion> quats,
                                 double tol = 1e-10, int max_iter = 500);

/// Sum of quat_distance from q to every input.
/// Same iteration started from `start` instead of the chordal mean.
WeiszfeldResult weiszfeld_median_from(std::span<const UnitQuaternion> quats,
                                      const UnitQuaternion& start, double tol = 1e-10,
                                      int max_iter = 500);

double geodesic_l1_cost(std::span<const UnitQuaternion> quats,
                        const UnitQuaternion& q);

struct KarcherResult {
  UnitQuaternion mean;
  int iterations = 0;
  bool converged = true;
  /// Set when some input lies >= pi/4 from the chordal mean (uniqueness not guaranteed).
  bool wide_spread = false;
  double gradient_norm = 0.0;
};

/// Riemannian L2 mean, initialised at the chordal mean.
KarcherResult karcher_mean(std::span<const UnitQuaternion> quats,
                           double tol = 1e-12, int max_iter = 200);

struct DispersionStats {
  UnitQuaternion karcher_mean;
  double sigma = 0.0;  ///< RMS geodesic deviation, radians
};

DispersionStats dispersion(std::span<const UnitQuaternion> quats);

struct ClusterSet {
  std::vector<UnitQuaternion> modes;
  std::vector<int> assignments;
  std::vector<int> member_counts;

  std::size_t size() const { return modes.size(); }
};

struct MeanShiftOptions {
  int max_iter = 100;
  /// Mode iteration stops once the shift drops below bandwidth * shift_fraction.
  double shift_fraction = 0.01;
  /// Modes closer than bandwidth * merge_fraction are merged.
  double merge_fraction = 0.5;
};

/// Flat-kernel mean shift under quat_distance, seeded at every input. Each
/// mode update is the Weiszfeld median of its in-bandwidth neighbours.
ClusterSet mean_shift(std::span<const UnitQuaternion> quats, double bandwidth,
                      const MeanShiftOptions& options = {});

/// Lower median; deterministic for even counts.
double median_scalar(std::span<const double> values);

}  // namespace posekit
