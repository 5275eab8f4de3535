#pragma once
/**
 * @file bingham.hpp
 * @brief Antipodally symmetric Bingham densities on S^3.
 *
 * Density: p(q) = exp(q^T V diag(Z) V^T q) / F(Z), with concentrations
 * Z = (l1 <= l2 <= l3 <= l4 = 0) paired with the columns of V. The last
 * column of V is the mode.
 *
 * F(Z) is evaluated by a fixed-seed quasi-Monte-Carlo rule: scrambled Sobol
 * points mapped uniformly onto S^3 and then pushed through an angular central
 * Gaussian (ACG) change of variables matched to Z, so concentrated densities
 * are resolved with the same node count as flat ones.
 */

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "posekit/rotation.hpp"

namespace posekit {

/// Lower cap on concentrations; beyond it the density is numerically a point mass.
inline constexpr double kMinConcentration = -900.0;

struct QuadratureConfig {
  int nodes = 200000;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

struct BinghamParams {
  Eigen::Matrix4d orientation = Eigen::Matrix4d::Identity();
  Eigen::Vector4d concentrations = Eigen::Vector4d::Zero();
  double log_norm = 0.0;
  /// Set when a concentration hit kMinConcentration during fitting.
  bool saturated = false;

  Eigen::Vector4d mode() const { return orientation.col(3); }
};

/// log of the integral over S^3 of exp(sum_i Z_i x_i^2). Requires Z <= 0.
double log_norm_constant(const Eigen::Vector4d& Z, const QuadratureConfig& quad = {});

/// Second moments E[x_i^2] and fourth moments E[x_i^4] in the canonical frame.
struct BinghamMoments {
  double log_norm = 0.0;
  Eigen::Vector4d second = Eigen::Vector4d::Zero();
  Eigen::Vector4d fourth = Eigen::Vector4d::Zero();
};

BinghamMoments bingham_moments(const Eigen::Vector4d& Z, const QuadratureConfig& quad = {});

/// Validates orientation/concentrations and caches log F(Z).
BinghamParams make_bingham(const Eigen::Matrix4d& orientation,
                           const Eigen::Vector4d& concentrations,
                           const QuadratureConfig& quad = {});

struct BinghamFitOptions {
  QuadratureConfig quadrature;
  /// Stop once max_j |E[x_j^2] - e_j| / e_j falls below this.
  double tolerance = 1e-3;
  int max_sweeps = 50;
};

/// Maximum-likelihood fit from the sign-invariant scatter matrix.
BinghamParams fit_bingham(std::span<const UnitQuaternion> quats,
                          const BinghamFitOptions& options = {});

double log_density(const BinghamParams& params, const UnitQuaternion& q);
double log_density(const BinghamParams& params, const Eigen::Vector4d& q);

/// Rejection sampler with an ACG envelope; deterministic for a fixed seed.
std::vector<UnitQuaternion> sample_bingham(const BinghamParams& params, int n,
                                           std::uint64_t seed);

/// Equatorial projection for plotting: the most concentrated direction V(:,0)
/// is dropped, the rest is expressed in the basis (V1, V2, V3) and normalised
/// onto S^2, so the mode maps to the north pole (0, 0, 1).
struct EquatorialPlot {
  Eigen::Vector4d mode = Eigen::Vector4d::UnitX();
  std::vector<Eigen::Vector3d> points;
  int grid_res = 0;
  /// Density on a grid_res x (2 grid_res) polar/azimuth grid, row-major.
  std::vector<double> grid_values;
};

EquatorialPlot project_equatorial(const BinghamParams& params,
                                  std::span<const UnitQuaternion> quats, int grid_res = 24);

}  // namespace posekit
