#pragma once
/**
 * @file serialization.hpp
 * @brief File formats: toyset/1 (JSON lines), mhp-model/1 (JSON), evaluation
 * reports (JSON + CSV), hypothesis sets (JSON lines) and Bingham plot data.
 *
 * Readers report malformed input as Error(kParse) with a 1-based line number
 * and unknown format tags as Error(kVersion).
 */

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "posekit/bingham.hpp"
#include "posekit/experiment.hpp"
#include "posekit/mhp_model.hpp"
#include "posekit/pipeline.hpp"

namespace posekit {

inline constexpr const char* kDatasetFormat = "toyset/1";
inline constexpr const char* kModelFormat = "mhp-model/1";
inline constexpr const char* kTrainLogFormat = "mhp-train-log/1";
inline constexpr const char* kReportFormat = "posekit-report/1";
inline constexpr const char* kBinghamFormat = "posekit-bingham/1";

nlohmann::json quat_json(const UnitQuaternion& q);
nlohmann::json vec_json(const Eigen::Vector3d& v);

void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

nlohmann::json train_config_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j, ModelSpec* spec = nullptr);

void write_model(std::ostream& out, const RegressorModel& model, const TrainConfig& config);
RegressorModel read_model(std::istream& in, TrainConfig* config = nullptr);
void save_model(const std::filesystem::path& path, const RegressorModel& model,
                const TrainConfig& config);
RegressorModel load_model(const std::filesystem::path& path, TrainConfig* config = nullptr);

nlohmann::json train_log_json(const TrainLog& log, const TrainConfig& config, int hypotheses);

nlohmann::json report_json(const EvalReport& report);
std::string report_csv(const EvalReport& report);

/// One hypothesis set per line: {"rotations": [[w,x,y,z], ...], "depths": [...]}.
/// Depths are optional and default to 1.
std::vector<HypothesisSet> read_hypotheses(std::istream& in);
void write_hypotheses(std::ostream& out, const std::vector<HypothesisSet>& sets);

nlohmann::json ambiguity_json(const AmbiguityReport& report);
nlohmann::json clusters_json(const ClusterSet& clusters);
nlohmann::json inference_json(const InferenceResult& result);

nlohmann::json bingham_json(const BinghamParams& params, const EquatorialPlot& plot);
/// Projected points, one row per point: set,x,y,z.
std::string bingham_points_csv(const std::vector<EquatorialPlot>& plots);

/// Writes text to a file, throwing Error(kInvalidArgument) when it cannot be opened.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace posekit
