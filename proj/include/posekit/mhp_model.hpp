#pragma once
/**
 * @file mhp_model.hpp
 * @brief Multi-hypothesis pose regressor: a small fully connected network with
 * M heads of (quaternion, depth), trained with a relaxed winner-take-all loss.
 */

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "posekit/rotation.hpp"

namespace posekit {

/// Outputs per hypothesis: four raw rotation numbers and a depth.
inline constexpr int kOutputsPerHypothesis = 5;
inline constexpr double kLeakySlope = 0.01;

struct HypothesisSet {
  std::vector<UnitQuaternion> rotations;  ///< unit, hemisphere form
  std::vector<double> depths;             ///< meters

  std::size_t size() const { return rotations.size(); }
};

struct Layer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

struct ModelSpec {
  int input_width = 10;
  std::vector<int> hidden = {128, 128};
  int hypotheses = 1;
  std::uint64_t seed = 1;
};

/// input -> hidden... (leaky ReLU) -> hypotheses * 5 (linear).
class RegressorModel {
 public:
  RegressorModel() = default;
  /// He-initialised weights, zero biases.
  explicit RegressorModel(const ModelSpec& spec);

  const ModelSpec& spec() const { return spec_; }
  int input_width() const { return spec_.input_width; }
  int num_hypotheses() const { return spec_.hypotheses; }
  /// Widths of every layer boundary, input first.
  std::vector<int> layer_sizes() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::size_t parameter_count() const;
  /// Row-major W then b, layer by layer.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  bool all_finite() const;

 private:
  ModelSpec spec_;
  std::vector<Layer> layers_;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 10;
  double learning_rate = 1e-4;
  /// Learning rate reached at the last epoch (linear per-epoch decay). Negative: constant.
  double learning_rate_end = -1.0;
  double epsilon_start = 0.05;
  double epsilon_end = 0.01;
  double lambda_depth = 3.0;
  double dropout_p = 0.5;
  std::uint64_t seed = 1;
};

/// x^2/2 for |x| <= 1, |x| - 1/2 otherwise.
double smooth_l1(double x);

double pose_loss(const UnitQuaternion& q, double depth, const UnitQuaternion& q_gt,
                 double depth_gt, double lambda);

struct MetaLoss {
  double loss = 0.0;
  int winner = 0;
};

/// Relaxed minimum over the active entries of per-hypothesis losses. The
/// coefficients use the number of active hypotheses. An empty mask means all active.
MetaLoss meta_loss_from_losses(std::span<const double> losses, double epsilon,
                               const std::vector<bool>& active = {});

MetaLoss meta_loss(const HypothesisSet& hyps, const UnitQuaternion& q_gt, double depth_gt,
                   double epsilon, double lambda, const std::vector<bool>& active = {});

/// Per-hypothesis weights of the relaxed minimum: {winner weight, other weight}.
struct MetaWeights {
  double winner = 1.0;
  double other = 0.0;
};
MetaWeights meta_weights(int active_count, double epsilon);

HypothesisSet forward(const RegressorModel& model, std::span<const double> observation);
/// Batched forward pass; observations are columns.
std::vector<HypothesisSet> forward_batch(const RegressorModel& model,
                                         const Eigen::MatrixXd& observations);
/// Raw head outputs (hypotheses * 5) before normalisation.
Eigen::VectorXd forward_raw(const RegressorModel& model, std::span<const double> observation);

struct TrainingExample {
  std::vector<double> observation;
  UnitQuaternion q_gt;
  double depth_gt = 0.0;
};

struct Gradient {
  std::vector<Layer> layers;
  double loss = 0.0;
  std::vector<int> winners;  ///< one per example
};

/// Exact gradient of the mean meta loss over `batch`. `masks[i]` is the
/// active-hypothesis mask of example i (empty = all active).
Gradient backward(const RegressorModel& model, std::span<const TrainingExample> batch,
                  double epsilon, double lambda,
                  std::span<const std::vector<bool>> masks = {});

struct EpochStats {
  int epoch = 0;
  double epsilon = 0.0;
  double mean_loss = 0.0;
  std::vector<int> winner_histogram;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
};

/// Adam training with per-sample per-epoch hypothesis dropout and linear
/// per-epoch epsilon (and optionally learning rate) decay. Reproducible for a fixed config and dataset.
TrainLog train(RegressorModel& model, std::span<const TrainingExample> data,
               const TrainConfig& config,
               const std::function<void(const EpochStats&)>& on_epoch = {});

}  // namespace posekit
