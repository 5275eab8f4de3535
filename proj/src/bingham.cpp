#include "posekit/bingham.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <utility>

#include "posekit/errors.hpp"

namespace posekit {

namespace {

constexpr double kSphereArea = 2.0 * std::numbers::pi * std::numbers::pi;  // |S^3|

using NodeSet = std::vector<Eigen::Vector4d>;

// Uniform QMC nodes on S^3, cached per (count, seed).
std::shared_ptr<const NodeSet> sphere_nodes(const QuadratureConfig& quad) {
  static std::mutex mutex;
  static std::map<std::pair<int, std::uint64_t>, std::shared_ptr<const NodeSet>> cache;
  const std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_pair(quad.nodes, quad.seed);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  std::mt19937_64 rng(quad.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double shift[3] = {unif(rng), unif(rng), unif(rng)};

  boost::random::sobol sobol(3);
  auto nodes = std::make_shared<NodeSet>();
  nodes->reserve(static_cast<std::size_t>(quad.nodes));
  for (int i = 0; i < quad.nodes; ++i) {
    double u[3];
    for (int d = 0; d < 3; ++d) {
      const double raw = std::ldexp(static_cast<double>(sobol()), -64);
      u[d] = std::fmod(raw + shift[d], 1.0);
    }
    // Area-preserving map [0,1)^3 -> S^3.
    const double r1 = std::sqrt(1.0 - u[0]);
    const double r2 = std::sqrt(u[0]);
    const double t1 = 2.0 * std::numbers::pi * u[1];
    const double t2 = 2.0 * std::numbers::pi * u[2];
    nodes->emplace_back(r1 * std::sin(t1), r1 * std::cos(t1), r2 * std::sin(t2),
                        r2 * std::cos(t2));
  }
  cache.emplace(key, nodes);
  return nodes;
}

void check_concentrations(const Eigen::Vector4d& Z) {
  if (!Z.allFinite() || (Z.array() > 0.0).any()) {
    throw Error(ErrorCode::kInvalidConcentration, "concentrations must be finite and <= 0");
  }
}

// Kent's envelope parameter: b solves sum_i 1/(b + 2 a_i) = 1 with a = -Z >= 0
// and min a = 0.
double acg_b(const Eigen::Vector4d& a) {
  auto f = [&](double b) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += 1.0 / (b + 2.0 * a[i]);
    return s - 1.0;
  };
  if (f(4.0) >= 0.0) return 4.0;
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, 1e-12, 4.0, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace

BinghamMoments bingham_moments(const Eigen::Vector4d& Z, const QuadratureConfig& quad) {
  check_concentrations(Z);
  if (quad.nodes < 1) throw Error(ErrorCode::kInvalidArgument, "quadrature needs nodes");
  const double shift = Z.maxCoeff();
  const Eigen::Vector4d lam = Z.array() - shift;
  const Eigen::Vector4d a = -lam;
  const double b = acg_b(a);
  const Eigen::Vector4d omega = (1.0 + 2.0 * a.array() / b).matrix();
  const Eigen::Vector4d inv_sqrt_omega = omega.cwiseSqrt().cwiseInverse();

  const auto nodes = sphere_nodes(quad);
  double wsum = 0.0;
  Eigen::Vector4d m2 = Eigen::Vector4d::Zero();
  Eigen::Vector4d m4 = Eigen::Vector4d::Zero();
  for (const Eigen::Vector4d& y : *nodes) {
    Eigen::Vector4d x = y.cwiseProduct(inv_sqrt_omega);
    x /= x.norm();
    const Eigen::Vector4d x2 = x.cwiseProduct(x);
    const double quad_form = omega.dot(x2);
    const double w = std::exp(lam.dot(x2)) * quad_form * quad_form;
    wsum += w;
    m2 += w * x2;
    m4 += w * x2.cwiseProduct(x2);
  }
  BinghamMoments out;
  const double n = static_cast<double>(nodes->size());
  out.log_norm = std::log(kSphereArea) - 0.5 * omega.array().log().sum() +
                 std::log(wsum / n) + shift;
  out.second = m2 / wsum;
  out.fourth = m4 / wsum;
  return out;
}

double log_norm_constant(const Eigen::Vector4d& Z, const QuadratureConfig& quad) {
  return bingham_moments(Z, quad).log_norm;
}

BinghamParams make_bingham(const Eigen::Matrix4d& orientation,
                           const Eigen::Vector4d& concentrations,
                           const QuadratureConfig& quad) {
  check_concentrations(concentrations);
  if ((orientation.transpose() * orientation - Eigen::Matrix4d::Identity())
          .cwiseAbs()
          .maxCoeff() > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "Bingham orientation must be orthonormal");
  }
  if (concentrations[3] != 0.0 || concentrations[0] > concentrations[1] ||
      concentrations[1] > concentrations[2]) {
    throw Error(ErrorCode::kInvalidConcentration,
                "concentrations must satisfy l1 <= l2 <= l3 <= l4 = 0");
  }
  BinghamParams p;
  p.orientation = orientation;
  p.concentrations = concentrations;
  p.log_norm = log_norm_constant(concentrations, quad);
  return p;
}

BinghamParams fit_bingham(std::span<const UnitQuaternion> quats,
                          const BinghamFitOptions& options) {
  if (quats.size() < 5) {
    throw Error(ErrorCode::kInsufficientHypotheses, "Bingham fit needs at least 5 samples");
  }
  Eigen::Matrix4d scatter = Eigen::Matrix4d::Zero();
  for (const auto& q : quats) scatter += q.coeffs() * q.coeffs().transpose();
  scatter /= static_cast<double>(quats.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(scatter);
  const Eigen::Vector4d e = eig.eigenvalues().cwiseMax(0.0);  // ascending

  BinghamParams p;
  p.orientation = eig.eigenvectors();
  if (p.orientation.determinant() < 0.0) p.orientation.col(0) *= -1.0;

  Eigen::Vector4d Z = Eigen::Vector4d::Zero();
  bool fixed[3] = {false, false, false};
  for (int j = 0; j < 3; ++j) {
    if (e[j] < 1e-12) {
      Z[j] = kMinConcentration;
      fixed[j] = true;
      p.saturated = true;
    } else {
      Z[j] = std::clamp(-0.5 / e[j], kMinConcentration, 0.0);
    }
  }

  const auto& quad = options.quadrature;
  auto residual_of = [&](const BinghamMoments& m) {
    double r = 0.0;
    for (int j = 0; j < 3; ++j) {
      if (fixed[j]) continue;
      r = std::max(r, std::abs(m.second[j] - e[j]) / std::max(e[j], 1e-12));
    }
    return r;
  };

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    if (residual_of(bingham_moments(Z, quad)) < options.tolerance) break;
    for (int j = 0; j < 3; ++j) {
      if (fixed[j]) continue;
      // E[x_j^2] increases with l_j; bracket over [kMinConcentration, 0].
      auto g = [&](double t) {
        Eigen::Vector4d trial = Z;
        trial[j] = t;
        return bingham_moments(trial, quad).second[j] - e[j];
      };
      if (g(0.0) <= 0.0) {
        Z[j] = 0.0;
        continue;
      }
      if (g(kMinConcentration) >= 0.0) {
        Z[j] = kMinConcentration;
        p.saturated = true;
        continue;
      }
      boost::uintmax_t iters = 60;
      auto tol = [](double lo, double hi) {
        return std::abs(hi - lo) <= 1e-7 * std::max(1.0, std::abs(lo));
      };
      const auto r =
          boost::math::tools::toms748_solve(g, kMinConcentration, 0.0, tol, iters);
      Z[j] = 0.5 * (r.first + r.second);
    }
  }

  // Equal scatter eigenvalues can leave tiny order inversions.
  std::sort(Z.data(), Z.data() + 3);
  Z[3] = 0.0;
  p.concentrations = Z;
  p.log_norm = log_norm_constant(Z, quad);
  return p;
}

double log_density(const BinghamParams& params, const Eigen::Vector4d& q) {
  const Eigen::Vector4d y = params.orientation.transpose() * q;
  return params.concentrations.dot(y.cwiseProduct(y)) - params.log_norm;
}

double log_density(const BinghamParams& params, const UnitQuaternion& q) {
  return log_density(params, q.coeffs());
}

std::vector<UnitQuaternion> sample_bingham(const BinghamParams& params, int n,
                                           std::uint64_t seed) {
  if (n <= 0) throw Error(ErrorCode::kInvalidArgument, "sample count must be positive");
  const Eigen::Vector4d lam =
      params.concentrations.array() - params.concentrations.maxCoeff();
  const Eigen::Vector4d a = -lam;
  const double b = acg_b(a);
  const Eigen::Vector4d omega = (1.0 + 2.0 * a.array() / b).matrix();
  const double log_bound = -(4.0 - b) / 2.0 + 2.0 * std::log(4.0 / b);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<UnitQuaternion> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    Eigen::Vector4d y;
    for (int i = 0; i < 4; ++i) y[i] = normal(rng) / std::sqrt(omega[i]);
    const Eigen::Vector4d x = y / y.norm();
    const Eigen::Vector4d x2 = x.cwiseProduct(x);
    const double log_ratio = lam.dot(x2) + 2.0 * std::log(omega.dot(x2)) - log_bound;
    if (std::log(unif(rng)) < log_ratio) {
      out.push_back(to_hemisphere(UnitQuaternion::normalized(params.orientation * x)));
    }
  }
  return out;
}

EquatorialPlot project_equatorial(const BinghamParams& params,
                                  std::span<const UnitQuaternion> quats, int grid_res) {
  EquatorialPlot plot;
  plot.mode = params.mode();
  const Eigen::Matrix<double, 4, 3> basis = params.orientation.rightCols<3>();
  for (const auto& q : quats) {
    const Eigen::Vector3d p = basis.transpose() * q.coeffs();
    const double n = p.norm();
    if (n > 1e-12) plot.points.push_back(p / n);
  }
  plot.grid_res = grid_res;
  if (grid_res > 0) {
    plot.grid_values.reserve(static_cast<std::size_t>(2 * grid_res * grid_res));
    for (int row = 0; row < grid_res; ++row) {
      const double theta = std::numbers::pi * (row + 0.5) / grid_res;
      for (int col = 0; col < 2 * grid_res; ++col) {
        const double phi = std::numbers::pi * (col + 0.5) / grid_res;
        const Eigen::Vector3d s(std::sin(theta) * std::cos(phi),
                                std::sin(theta) * std::sin(phi), std::cos(theta));
        plot.grid_values.push_back(std::exp(log_density(params, Eigen::Vector4d(basis * s))));
      }
    }
  }
  return plot;
}

}  // namespace posekit
