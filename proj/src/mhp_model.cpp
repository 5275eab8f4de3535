#include "posekit/mhp_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "posekit/errors.hpp"

namespace posekit {

namespace {

// Largest |u| at which the arccos derivative is evaluated.
constexpr double kArccosGuard = 1.0 - 1e-7;

Eigen::MatrixXd leaky(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
}

Eigen::MatrixXd leaky_slope(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; });
}

HypothesisSet decode(const Eigen::Ref<const Eigen::VectorXd>& raw, int m) {
  HypothesisSet out;
  out.rotations.reserve(static_cast<std::size_t>(m));
  out.depths.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const Eigen::Vector4d r = raw.segment<4>(kOutputsPerHypothesis * k);
    out.rotations.push_back(to_hemisphere(UnitQuaternion::normalized(r)));
    out.depths.push_back(raw[kOutputsPerHypothesis * k + 4]);
  }
  return out;
}

void check_mask(const std::vector<bool>& active, std::size_t m) {
  if (!active.empty() && active.size() != m) {
    throw Error(ErrorCode::kWidthMismatch, "active mask size differs from hypothesis count");
  }
}

// Forward pass keeping pre-activations for backpropagation.
struct Trace {
  std::vector<Eigen::MatrixXd> inputs;  // input of each layer
  std::vector<Eigen::MatrixXd> pre;     // W x + b of each hidden layer
  Eigen::MatrixXd output;
};

Trace run(const RegressorModel& model, const Eigen::MatrixXd& x) {
  Trace t;
  Eigen::MatrixXd a = x;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    t.inputs.push_back(a);
    Eigen::MatrixXd z = layers[l].W * a;
    z.colwise() += layers[l].b;
    if (l + 1 == layers.size()) {
      t.output = std::move(z);
    } else {
      a = leaky(z);
      t.pre.push_back(std::move(z));
    }
  }
  return t;
}

}  // namespace

RegressorModel::RegressorModel(const ModelSpec& spec) : spec_(spec) {
  if (spec.input_width < 1 || spec.hypotheses < 1) {
    throw Error(ErrorCode::kInvalidArgument, "model needs positive input width and M >= 1");
  }
  std::mt19937_64 rng(spec.seed);
  const std::vector<int> sizes = layer_sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l + 1] < 1) throw Error(ErrorCode::kInvalidArgument, "empty hidden layer");
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / sizes[l]));
    Layer layer;
    layer.W.resize(sizes[l + 1], sizes[l]);
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) layer.W(r, c) = normal(rng);
    }
    layer.b = Eigen::VectorXd::Zero(sizes[l + 1]);
    layers_.push_back(std::move(layer));
  }
}

std::vector<int> RegressorModel::layer_sizes() const {
  std::vector<int> sizes{spec_.input_width};
  sizes.insert(sizes.end(), spec_.hidden.begin(), spec_.hidden.end());
  sizes.push_back(spec_.hypotheses * kOutputsPerHypothesis);
  return sizes;
}

std::size_t RegressorModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

std::vector<double> RegressorModel::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) flat.push_back(l.W(r, c));
    }
    for (Eigen::Index r = 0; r < l.b.size(); ++r) flat.push_back(l.b[r]);
  }
  return flat;
}

void RegressorModel::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw Error(ErrorCode::kWidthMismatch, "parameter vector has the wrong length");
  }
  std::size_t i = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = flat[i++];
    }
    for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b[r] = flat[i++];
  }
}

bool RegressorModel::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(),
                     [](const Layer& l) { return l.W.allFinite() && l.b.allFinite(); });
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a <= 1.0 ? 0.5 * x * x : a - 0.5;
}

double pose_loss(const UnitQuaternion& q, double depth, const UnitQuaternion& q_gt,
                 double depth_gt, double lambda) {
  return rotation_loss(q, q_gt) + lambda * smooth_l1(depth - depth_gt);
}

MetaWeights meta_weights(int active_count, double epsilon) {
  if (active_count <= 1) return {1.0, 0.0};
  const double m = active_count;
  const double other = epsilon / (m - 1.0);
  return {1.0 - epsilon * m / (m - 1.0) + other, other};
}

MetaLoss meta_loss_from_losses(std::span<const double> losses, double epsilon,
                               const std::vector<bool>& active) {
  check_mask(active, losses.size());
  int count = 0;
  int winner = -1;
  double sum = 0.0;
  for (std::size_t j = 0; j < losses.size(); ++j) {
    if (!active.empty() && !active[j]) continue;
    ++count;
    sum += losses[j];
    if (winner < 0 || losses[j] < losses[static_cast<std::size_t>(winner)]) {
      winner = static_cast<int>(j);
    }
  }
  if (count == 0) {
    throw Error(ErrorCode::kNoActiveHypotheses, "every hypothesis is masked");
  }
  const double m = count;
  if (epsilon < 0.0 || (count > 1 && epsilon >= (m - 1.0) / m)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in [0, (M-1)/M)");
  }
  const double best = losses[static_cast<std::size_t>(winner)];
  if (count == 1 || epsilon == 0.0) return {best, winner};
  const double loss = (1.0 - epsilon * m / (m - 1.0)) * best + epsilon / (m - 1.0) * sum;
  return {loss, winner};
}

MetaLoss meta_loss(const HypothesisSet& hyps, const UnitQuaternion& q_gt, double depth_gt,
                   double epsilon, double lambda, const std::vector<bool>& active) {
  std::vector<double> losses;
  losses.reserve(hyps.size());
  for (std::size_t j = 0; j < hyps.size(); ++j) {
    losses.push_back(pose_loss(hyps.rotations[j], hyps.depths[j], q_gt, depth_gt, lambda));
  }
  return meta_loss_from_losses(losses, epsilon, active);
}

Eigen::VectorXd forward_raw(const RegressorModel& model, std::span<const double> observation) {
  if (static_cast<int>(observation.size()) != model.input_width()) {
    throw Error(ErrorCode::kWidthMismatch, "observation width " +
                                               std::to_string(observation.size()) +
                                               " != model input width " +
                                               std::to_string(model.input_width()));
  }
  const Eigen::Map<const Eigen::VectorXd> x(observation.data(),
                                            static_cast<Eigen::Index>(observation.size()));
  return run(model, Eigen::MatrixXd(x)).output.col(0);
}

HypothesisSet forward(const RegressorModel& model, std::span<const double> observation) {
  return decode(forward_raw(model, observation), model.num_hypotheses());
}

std::vector<HypothesisSet> forward_batch(const RegressorModel& model,
                                         const Eigen::MatrixXd& observations) {
  if (observations.rows() != model.input_width()) {
    throw Error(ErrorCode::kWidthMismatch, "observation width != model input width");
  }
  const Eigen::MatrixXd out = run(model, observations).output;
  std::vector<HypothesisSet> sets;
  sets.reserve(static_cast<std::size_t>(out.cols()));
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    sets.push_back(decode(out.col(c), model.num_hypotheses()));
  }
  return sets;
}

Gradient backward(const RegressorModel& model, std::span<const TrainingExample> batch,
                  double epsilon, double lambda, std::span<const std::vector<bool>> masks) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyDataset, "backward on an empty batch");
  if (!masks.empty() && masks.size() != batch.size()) {
    throw Error(ErrorCode::kWidthMismatch, "one mask per example is required");
  }
  const int m = model.num_hypotheses();
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd x(model.input_width(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& obs = batch[static_cast<std::size_t>(c)].observation;
    if (static_cast<int>(obs.size()) != model.input_width()) {
      throw Error(ErrorCode::kWidthMismatch, "observation width != model input width");
    }
    x.col(c) = Eigen::Map<const Eigen::VectorXd>(obs.data(), model.input_width());
  }
  const Trace t = run(model, x);

  Gradient grad;
  grad.winners.reserve(batch.size());
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(t.output.rows(), n);
  std::vector<double> losses(static_cast<std::size_t>(m));
  const double scale = 1.0 / static_cast<double>(n);

  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& ex = batch[static_cast<std::size_t>(c)];
    const std::vector<bool> empty_mask;
    const std::vector<bool>& active = masks.empty() ? empty_mask : masks[static_cast<std::size_t>(c)];
    check_mask(active, static_cast<std::size_t>(m));
    const Eigen::Vector4d& g = ex.q_gt.coeffs();

    for (int k = 0; k < m; ++k) {
      const Eigen::Vector4d r = t.output.col(c).segment<4>(kOutputsPerHypothesis * k);
      const UnitQuaternion q = UnitQuaternion::normalized(r);
      losses[static_cast<std::size_t>(k)] =
          pose_loss(q, t.output(kOutputsPerHypothesis * k + 4, c), ex.q_gt, ex.depth_gt, lambda);
    }
    const MetaLoss ml = meta_loss_from_losses(losses, epsilon, active);
    grad.loss += ml.loss * scale;
    grad.winners.push_back(ml.winner);

    const int active_count =
        active.empty() ? m : static_cast<int>(std::count(active.begin(), active.end(), true));
    const MetaWeights w = meta_weights(active_count, epsilon);

    for (int k = 0; k < m; ++k) {
      if (!active.empty() && !active[static_cast<std::size_t>(k)]) continue;
      const double wk = (k == ml.winner ? w.winner : w.other) * scale;
      if (wk == 0.0) continue;
      const Eigen::Index row = kOutputsPerHypothesis * k;
      const Eigen::Vector4d r = t.output.col(c).segment<4>(row);
      const double norm = r.norm();
      if (norm > 0.0) {
        // L = arccos(2 c^2 - 1) with c = <r/|r|, g>; the hemisphere flip cancels in c^2.
        const Eigen::Vector4d qh = r / norm;
        const double cos_q = qh.dot(g);
        const double u = std::clamp(2.0 * cos_q * cos_q - 1.0, -kArccosGuard, kArccosGuard);
        const double dl_du = -1.0 / std::sqrt(1.0 - u * u);
        dy.col(c).segment<4>(row) = wk * dl_du * 4.0 * cos_q * (g - cos_q * qh) / norm;
      }
      const double dd = t.output(row + 4, c) - ex.depth_gt;
      dy(row + 4, c) = wk * lambda * std::clamp(dd, -1.0, 1.0);
    }
  }

  const auto& layers = model.layers();
  grad.layers.resize(layers.size());
  Eigen::MatrixXd delta = std::move(dy);
  for (std::size_t l = layers.size(); l-- > 0;) {
    grad.layers[l].W = delta * t.inputs[l].transpose();
    grad.layers[l].b = delta.rowwise().sum();
    if (l > 0) {
      delta = (layers[l].W.transpose() * delta).cwiseProduct(leaky_slope(t.pre[l - 1]));
    }
  }
  return grad;
}

TrainLog train(RegressorModel& model, std::span<const TrainingExample> data,
               const TrainConfig& config, const std::function<void(const EpochStats&)>& on_epoch) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "training set is empty");
  if (config.epochs < 1 || config.batch_size < 1 || !(config.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epochs, batch size and learning rate must be positive");
  }
  if (config.dropout_p < 0.0 || config.dropout_p >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "dropout_p must lie in [0, 1)");
  }
  const int m = model.num_hypotheses();
  const double eps_cap = m > 1 ? (m - 1.0) / m : 1.0;
  if (config.epsilon_start < 0.0 || config.epsilon_end < 0.0 ||
      (m > 1 && (config.epsilon_start >= eps_cap || config.epsilon_end >= eps_cap))) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in [0, (M-1)/M)");
  }

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;
  auto& layers = model.layers();
  std::vector<Layer> m1, m2;
  for (const auto& l : layers) {
    m1.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()), Eigen::VectorXd::Zero(l.b.size())});
    m2.push_back(m1.back());
  }

  std::mt19937_64 rng(config.seed);
  std::bernoulli_distribution drop(config.dropout_p);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainLog log;
  long step = 0;
  std::vector<TrainingExample> batch;
  std::vector<std::vector<bool>> masks;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double frac = config.epochs > 1 ? static_cast<double>(epoch) / (config.epochs - 1) : 0.0;
    const double epsilon = config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac;
    const double lr = config.learning_rate_end < 0.0
                          ? config.learning_rate
                          : config.learning_rate + (config.learning_rate_end - config.learning_rate) * frac;
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    stats.epoch = epoch;
    stats.epsilon = epsilon;
    stats.winner_histogram.assign(static_cast<std::size_t>(m), 0);
    double loss_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      masks.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(data[order[i]]);
        std::vector<bool> mask(static_cast<std::size_t>(m), true);
        if (m > 1 && config.dropout_p > 0.0) {
          for (int k = 0; k < m; ++k) mask[static_cast<std::size_t>(k)] = !drop(rng);
          if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
            std::uniform_int_distribution<int> pick(0, m - 1);
            mask[static_cast<std::size_t>(pick(rng))] = true;
          }
        }
        masks.push_back(std::move(mask));
      }

      const Gradient g = backward(model, batch, epsilon, config.lambda_depth, masks);
      if (!std::isfinite(g.loss)) {
        throw Error(ErrorCode::kDivergence, "training loss became non-finite at epoch " +
                                                std::to_string(epoch) + ", step " +
                                                std::to_string(step));
      }
      loss_sum += g.loss * static_cast<double>(stop - start);
      for (int w : g.winners) ++stats.winner_histogram[static_cast<std::size_t>(w)];

      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t l = 0; l < layers.size(); ++l) {
        m1[l].W = kBeta1 * m1[l].W + (1.0 - kBeta1) * g.layers[l].W;
        m1[l].b = kBeta1 * m1[l].b + (1.0 - kBeta1) * g.layers[l].b;
        m2[l].W = kBeta2 * m2[l].W + (1.0 - kBeta2) * g.layers[l].W.cwiseAbs2();
        m2[l].b = kBeta2 * m2[l].b + (1.0 - kBeta2) * g.layers[l].b.cwiseAbs2();
        layers[l].W.array() -= lr * (m1[l].W.array() / c1) /
                               ((m2[l].W.array() / c2).sqrt() + kAdamEps);
        layers[l].b.array() -= lr * (m1[l].b.array() / c1) /
                               ((m2[l].b.array() / c2).sqrt() + kAdamEps);
      }
    }
    if (!model.all_finite()) {
      throw Error(ErrorCode::kDivergence, "parameters became non-finite at epoch " +
                                              std::to_string(epoch));
    }
    stats.mean_loss = loss_sum / static_cast<double>(data.size());
    if (on_epoch) on_epoch(stats);
    log.epochs.push_back(std::move(stats));
  }
  return log;
}

}  // namespace posekit
