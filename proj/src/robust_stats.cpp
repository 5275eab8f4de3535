#include "posekit/robust_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "posekit/errors.hpp"

namespace posekit {

namespace {

constexpr double kCoincident = 1e-9;

void require_nonempty(std::span<const UnitQuaternion> quats, const char* what) {
  if (quats.empty()) throw Error(ErrorCode::kEmptyInput, what);
}

bool all_same_rotation(std::span<const UnitQuaternion> quats) {
  const UnitQuaternion& first = quats.front();
  return std::all_of(quats.begin(), quats.end(), [&](const UnitQuaternion& q) {
    return q == first || q == -first;
  });
}

// Weiszfeld step pieces at x: sum of unit tangents, sum of inverse distances,
// and how many inputs coincide with x.
struct WeiszfeldTerms {
  Eigen::Vector3d unit_sum = Eigen::Vector3d::Zero();
  double inverse_sum = 0.0;
  int coincident = 0;
};

WeiszfeldTerms weiszfeld_terms(std::span<const UnitQuaternion> quats,
                               const UnitQuaternion& x) {
  WeiszfeldTerms t;
  for (const auto& q : quats) {
    const Eigen::Vector3d v = log_map_unchecked(x, q);
    const double d = v.norm();
    if (d < kCoincident) {
      ++t.coincident;
      continue;
    }
    t.unit_sum += v / d;
    t.inverse_sum += 1.0 / d;
  }
  return t;
}

}  // namespace

double geodesic_l1_cost(std::span<const UnitQuaternion> quats,
                        const UnitQuaternion& q) {
  double cost = 0.0;
  for (const auto& p : quats) cost += quat_distance(p, q);
  return cost;
}

WeiszfeldResult weiszfeld_median(std::span<const UnitQuaternion> quats,
                                 double tol, int max_iter) {
  require_nonempty(quats, "weiszfeld_median of an empty list");
  return weiszfeld_median_from(quats, chordal_mean(quats), tol, max_iter);
}

WeiszfeldResult weiszfeld_median_from(std::span<const UnitQuaternion> quats,
                                      const UnitQuaternion& start, double tol, int max_iter) {
  require_nonempty(quats, "weiszfeld_median of an empty list");
  WeiszfeldResult result;
  if (all_same_rotation(quats)) {
    result.median = to_hemisphere(quats.front());
    result.objective_trace.push_back(0.0);
    return result;
  }

  UnitQuaternion x = start;
  double cost = geodesic_l1_cost(quats, x);
  result.objective_trace.push_back(cost);
  result.converged = false;

  for (int it = 1; it <= max_iter; ++it) {
    result.iterations = it;

    // The optimum may sit on a data point, where plain Weiszfeld stalls.
    // Test the nearest input with the subgradient condition |R| <= multiplicity.
    std::size_t nearest = 0;
    double nearest_d = quat_distance(x, quats[0]);
    for (std::size_t i = 1; i < quats.size(); ++i) {
      const double d = quat_distance(x, quats[i]);
      if (d < nearest_d) {
        nearest_d = d;
        nearest = i;
      }
    }
    if (nearest_d >= kCoincident) {
      const UnitQuaternion& p = quats[nearest];
      const WeiszfeldTerms at_p = weiszfeld_terms(quats, p);
      const double p_cost = geodesic_l1_cost(quats, p);
      if (at_p.unit_sum.norm() <= at_p.coincident && p_cost <= cost) {
        x = p;
        cost = p_cost;
        result.objective_trace.push_back(cost);
        result.converged = true;
        break;
      }
    }

    const WeiszfeldTerms t = weiszfeld_terms(quats, x);
    if (t.inverse_sum == 0.0) {
      result.converged = true;
      break;
    }
    Eigen::Vector3d step = t.unit_sum / t.inverse_sum;
    if (t.coincident > 0) {
      // Coincident terms are dropped; the remaining pull must beat their mass.
      const double pull = t.unit_sum.norm();
      if (pull <= t.coincident) {
        result.converged = true;
        break;
      }
      step *= 1.0 - t.coincident / pull;
    }

    // Backtrack so the objective never increases.
    UnitQuaternion candidate = exp_map(x, {step});
    double candidate_cost = geodesic_l1_cost(quats, candidate);
    for (int halvings = 0; candidate_cost > cost && halvings < 40; ++halvings) {
      step *= 0.5;
      candidate = exp_map(x, {step});
      candidate_cost = geodesic_l1_cost(quats, candidate);
    }
    if (candidate_cost > cost) {
      result.converged = true;
      break;
    }
    x = candidate;
    cost = candidate_cost;
    result.objective_trace.push_back(cost);
    if (step.norm() < tol) {
      result.converged = true;
      break;
    }
  }
  result.median = to_hemisphere(x);
  return result;
}

KarcherResult karcher_mean(std::span<const UnitQuaternion> quats, double tol,
                           int max_iter) {
  require_nonempty(quats, "karcher_mean of an empty list");
  KarcherResult result;
  if (all_same_rotation(quats)) {
    result.mean = to_hemisphere(quats.front());
    return result;
  }
  UnitQuaternion x = chordal_mean(quats);
  for (const auto& q : quats) {
    if (quat_distance(q, x) >= std::numbers::pi / 4.0) {
      result.wide_spread = true;
      break;
    }
  }
  result.converged = false;
  const double n = static_cast<double>(quats.size());
  for (int it = 1; it <= max_iter; ++it) {
    result.iterations = it;
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();
    for (const auto& q : quats) grad += log_map_unchecked(x, q);
    grad /= n;
    result.gradient_norm = grad.norm();
    if (result.gradient_norm < tol) {
      result.converged = true;
      break;
    }
    x = exp_map(x, {grad});
  }
  result.mean = to_hemisphere(x);
  return result;
}

DispersionStats dispersion(std::span<const UnitQuaternion> quats) {
  require_nonempty(quats, "dispersion of an empty list");
  DispersionStats stats;
  stats.karcher_mean = karcher_mean(quats).mean;
  double sum_sq = 0.0;
  for (const auto& q : quats) {
    const double d = quat_distance(q, stats.karcher_mean);
    sum_sq += d * d;
  }
  stats.sigma = std::sqrt(sum_sq / static_cast<double>(quats.size()));
  return stats;
}

ClusterSet mean_shift(std::span<const UnitQuaternion> quats, double bandwidth,
                      const MeanShiftOptions& options) {
  require_nonempty(quats, "mean_shift of an empty list");
  if (!(bandwidth > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mean shift bandwidth must be positive");
  }
  const std::size_t n = quats.size();

  struct Mode {
    UnitQuaternion q;
    int support = 0;
    std::size_t seed = 0;
    int basin = 0;
  };
  std::vector<Mode> converged;
  converged.reserve(n);

  std::vector<UnitQuaternion> neighbours;
  neighbours.reserve(n);
  for (std::size_t seed = 0; seed < n; ++seed) {
    UnitQuaternion m = quats[seed];
    int support = 0;
    for (int it = 0; it < options.max_iter; ++it) {
      neighbours.clear();
      for (const auto& q : quats) {
        if (quat_distance(q, m) < bandwidth) neighbours.push_back(q);
      }
      support = static_cast<int>(neighbours.size());
      if (neighbours.empty()) break;
      // Warm start: with two equally sized bundles in the window the L1
      // median is not unique, and a cold start lands between them.
      const UnitQuaternion next = weiszfeld_median_from(neighbours, m).median;
      const double shift = quat_distance(next, m);
      m = next;
      if (shift < bandwidth * options.shift_fraction) break;
    }
    converged.push_back({to_hemisphere(m), support, seed, 0});
  }

  // Rank by how many seeds landed on a mode, then by kernel support. A seed
  // stalled between two bundles sees both and has the larger support, but
  // few seeds end there.
  const double merge_radius = bandwidth * options.merge_fraction;
  std::vector<int> basin(converged.size(), 0);
  for (std::size_t a = 0; a < converged.size(); ++a) {
    for (const auto& other : converged) {
      if (quat_distance(converged[a].q, other.q) < merge_radius) ++basin[a];
    }
    converged[a].basin = basin[a];
  }
  std::stable_sort(converged.begin(), converged.end(), [](const Mode& a, const Mode& b) {
    if (a.basin != b.basin) return a.basin > b.basin;
    return a.support > b.support;
  });
  std::vector<UnitQuaternion> kept;
  for (const auto& mode : converged) {
    const bool close = std::any_of(kept.begin(), kept.end(), [&](const UnitQuaternion& k) {
      return quat_distance(k, mode.q) < merge_radius;
    });
    if (!close) kept.push_back(mode.q);
  }

  auto nearest_mode = [](const std::vector<UnitQuaternion>& modes, const UnitQuaternion& q) {
    int best = 0;
    double best_d = quat_distance(modes[0], q);
    for (std::size_t k = 1; k < modes.size(); ++k) {
      const double d = quat_distance(modes[k], q);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    return best;
  };

  // Modes that attract no point are dropped so every cluster is non-empty.
  std::vector<int> counts(kept.size(), 0);
  for (const auto& q : quats) ++counts[nearest_mode(kept, q)];
  ClusterSet out;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (counts[k] > 0) out.modes.push_back(kept[k]);
  }
  out.member_counts.assign(out.modes.size(), 0);
  out.assignments.reserve(n);
  for (const auto& q : quats) {
    const int k = nearest_mode(out.modes, q);
    out.assignments.push_back(k);
    ++out.member_counts[k];
  }
  return out;
}

double median_scalar(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "median of an empty list");
  std::vector<double> sorted(values.begin(), values.end());
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>((sorted.size() - 1) / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  return *mid;
}

}  // namespace posekit
