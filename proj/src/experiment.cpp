#include "posekit/experiment.hpp"

#include <algorithm>

#include "posekit/errors.hpp"

namespace posekit {

Dataset generate_dataset(const DatasetConfig& config) {
  Dataset d;
  d.config = config;
  d.object = make_object(config.object);
  d.samples = sample_dataset(d.object, config);
  return d;
}

std::vector<TrainingExample> training_examples(std::span<const ToySample> samples) {
  std::vector<TrainingExample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.observation, s.gt_rotation, s.gt_depth});
  return out;
}

InferenceConfig default_inference(ObjectKind kind) {
  InferenceConfig c;
  c.meanshift_bandwidth = default_bandwidth(kind);
  return c;
}

SampleRecord score_sample(const ToyObject& obj, const ToySample& sample,
                          const HypothesisSet& hyps, const InferenceConfig& config,
                          InferenceResult* result) {
  SampleRecord rec;
  rec.ambiguous_gt = sample.ambiguous_gt;
  PoseEstimate est;
  if (hyps.size() == 1) {
    est.rotation = hyps.rotations.front();
    est.translation =
        backproject(sample.intrinsics, sample.bbox_center[0], sample.bbox_center[1],
                    std::max(hyps.depths.front(), config.min_depth));
  } else {
    InferenceResult r = infer(hyps, sample.intrinsics, sample.bbox_center, config);
    est = r.pose;
    rec.ambiguous_pred = r.ambiguity.ambiguous;
    rec.confidence_sigma = r.confidence_sigma;
    if (rec.ambiguous_pred && sample.gt_axis_camera && r.ambiguity.axis) {
      rec.axis_dev_deg = axis_deviation(*r.ambiguity.axis, RotationAxis(*sample.gt_axis_camera));
    }
    if (result != nullptr) *result = std::move(r);
  }
  const PoseEstimate gt{sample.gt_rotation, sample.gt_translation()};
  rec.add_err = add_error(obj.model_points, est, gt);
  rec.adi_err = adi_error(obj.model_points, est, gt);
  rec.add_pass = rec.add_err < kPoseDiameterFraction * obj.diameter;
  rec.adi_pass = rec.adi_err < kPoseDiameterFraction * obj.diameter;
  rec.rot_err_deg = rotation_error_deg(est, gt);
  rec.trans_err_mm = translation_error_mm(est, gt);
  return rec;
}

EvalReport evaluate(const RegressorModel& model, const ToyObject& obj,
                    std::span<const ToySample> samples, const InferenceConfig& config) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyDataset, "evaluation set is empty");
  EvalReport report;
  report.object = obj.id;
  report.hypotheses = model.num_hypotheses();
  report.inference = config;

  Eigen::MatrixXd obs(model.input_width(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<int>(samples[i].observation.size()) != model.input_width()) {
      throw Error(ErrorCode::kWidthMismatch, "sample observation width != model input width");
    }
    obs.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(samples[i].observation.data(), model.input_width());
  }
  const std::vector<HypothesisSet> hyps = forward_batch(model, obs);
  report.records.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    report.records.push_back(score_sample(obj, samples[i], hyps[i], config));
  }
  report.aggregates = aggregate(report.records);
  report.confidence = confidence_table(report.records, default_confidence_bins());
  return report;
}

std::vector<SweepRow> sweep_hypotheses(const ToyObject& obj, std::span<const ToySample> train_set,
                                       std::span<const ToySample> test, std::span<const int> counts,
                                       const ModelSpec& base_spec, const TrainConfig& train_config,
                                       const InferenceConfig& inference,
                                       const std::function<void(const SweepRow&)>& on_row) {
  const std::vector<TrainingExample> examples = training_examples(train_set);
  std::vector<SweepRow> rows;
  for (int m : counts) {
    ModelSpec spec = base_spec;
    spec.hypotheses = m;
    RegressorModel model(spec);
    const TrainLog log = train(model, examples, train_config);
    SweepRow row;
    row.hypotheses = m;
    row.final_loss = log.epochs.back().mean_loss;
    row.aggregates = evaluate(model, obj, test, inference).aggregates;
    if (on_row) on_row(row);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace posekit
