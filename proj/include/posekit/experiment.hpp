#pragma once
/**
 * @file experiment.hpp
 * @brief Glue between the toy world, the regressor and the inference pipeline:
 * dataset bundles, evaluation reports and the hypothesis-count sweep.
 */

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "posekit/metrics.hpp"
#include "posekit/mhp_model.hpp"
#include "posekit/pipeline.hpp"
#include "posekit/toy_world.hpp"

namespace posekit {

struct Dataset {
  DatasetConfig config;
  ToyObject object;
  std::vector<ToySample> samples;
};

Dataset generate_dataset(const DatasetConfig& config);

std::vector<TrainingExample> training_examples(std::span<const ToySample> samples);

/// Inference config with the object's default bandwidth.
InferenceConfig default_inference(ObjectKind kind);

struct EvalReport {
  std::string object;
  int hypotheses = 0;
  InferenceConfig inference;
  std::vector<SampleRecord> records;
  EvalAggregates aggregates;
  std::vector<ConfidenceBin> confidence;
};

/// Scores one prediction. A single hypothesis is used as is (no ambiguity
/// test, zero dispersion); two or more go through infer().
SampleRecord score_sample(const ToyObject& obj, const ToySample& sample,
                          const HypothesisSet& hyps, const InferenceConfig& config,
                          InferenceResult* result = nullptr);

EvalReport evaluate(const RegressorModel& model, const ToyObject& obj,
                    std::span<const ToySample> samples, const InferenceConfig& config);

struct SweepRow {
  int hypotheses = 0;
  double final_loss = 0.0;
  EvalAggregates aggregates;
};

/// Trains one model per hypothesis count and evaluates it on `test`.
std::vector<SweepRow> sweep_hypotheses(const ToyObject& obj, std::span<const ToySample> train_set,
                                       std::span<const ToySample> test, std::span<const int> counts,
                                       const ModelSpec& base_spec, const TrainConfig& train_config,
                                       const InferenceConfig& inference,
                                       const std::function<void(const SweepRow&)>& on_row = {});

}  // namespace posekit
