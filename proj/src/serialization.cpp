#include "posekit/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "posekit/errors.hpp"

namespace posekit {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string opt_fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what);
}

json parse_line(const std::string& text, std::size_t line) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    parse_fail(line, e.what());
  }
}

void check_format(const json& j, const char* expected, std::size_t line) {
  if (!j.is_object() || !j.contains("format")) parse_fail(line, "missing format tag");
  const std::string got = j.at("format").get<std::string>();
  if (got != expected) {
    throw Error(ErrorCode::kVersion, "line " + std::to_string(line) + ": expected format '" +
                                         std::string(expected) + "', found '" + got + "'");
  }
}

UnitQuaternion quat_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw Error(ErrorCode::kInvalidQuaternion, "quaternion needs 4 entries");
  return UnitQuaternion::from_coeffs(Eigen::Vector4d(v[0], v[1], v[2], v[3]));
}

// Runs `fn`, converting library and JSON errors into parse errors at `line`.
template <typename Fn>
auto at_line(std::size_t line, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    parse_fail(line, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse || e.code() == ErrorCode::kVersion) throw;
    parse_fail(line, e.what());
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path.string() + "'");
  return out;
}

json camera_json(const PinholeCamera& c) {
  return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}};
}

PinholeCamera camera_from(const json& j) {
  PinholeCamera c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  if (!(c.fx > 0.0) || !(c.fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  return c;
}

const char* symmetry_name(SymmetryKind k) {
  switch (k) {
    case SymmetryKind::kFiniteGroup: return "finite-group";
    case SymmetryKind::kViewConditionalArc: return "view-conditional-arc";
    case SymmetryKind::kContinuousAxis: return "continuous-axis";
  }
  return "unknown";
}

}  // namespace

json quat_json(const UnitQuaternion& q) { return {q.w(), q.x(), q.y(), q.z()}; }

json vec_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

void write_dataset(std::ostream& out, const Dataset& d) {
  const auto& c = d.config;
  json header = {
      {"format", kDatasetFormat},
      {"object", to_string(c.object)},
      {"n", d.samples.size()},
      {"seed", c.seed},
      {"noise_sigma", c.noise_sigma},
      {"depth_range", {c.depth_range.min, c.depth_range.max}},
      {"camera", camera_json(c.camera)},
      {"center_half_extent", {c.center_half_width, c.center_half_height}},
      {"object_spec",
       {{"diameter", d.object.diameter},
        {"model_points", d.object.model_points.size()},
        {"symmetry", symmetry_name(d.object.symmetry)},
        {"axis", vec_json(d.object.axis)},
        {"visibility_threshold", d.object.visibility_threshold}}},
  };
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto& s = d.samples[i];
    json line = {
        {"index", i},
        {"observation", s.observation},
        {"gt_rotation", quat_json(s.gt_rotation)},
        {"gt_depth", s.gt_depth},
        {"bbox_center", {s.bbox_center[0], s.bbox_center[1]}},
        {"intrinsics", {s.intrinsics.fx, s.intrinsics.fy, s.intrinsics.cx, s.intrinsics.cy}},
        {"ambiguous_gt", s.ambiguous_gt},
        {"gt_axis_camera", s.gt_axis_camera ? vec_json(*s.gt_axis_camera) : json(nullptr)},
    };
    out << line.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset d;
  std::string text;
  std::size_t line = 0;
  if (!std::getline(in, text)) throw Error(ErrorCode::kParse, "line 1: empty dataset file");
  ++line;
  const json header = parse_line(text, line);
  check_format(header, kDatasetFormat, line);
  std::size_t expected = 0;
  at_line(line, [&] {
    auto& c = d.config;
    c.object = parse_object_kind(header.at("object").get<std::string>());
    c.seed = header.at("seed").get<std::uint64_t>();
    c.noise_sigma = header.at("noise_sigma").get<double>();
    const auto range = header.at("depth_range").get<std::vector<double>>();
    if (range.size() != 2) throw Error(ErrorCode::kInvalidArgument, "depth_range needs 2 values");
    c.depth_range = {range[0], range[1]};
    c.camera = camera_from(header.at("camera"));
    const auto ext = header.at("center_half_extent").get<std::vector<double>>();
    if (ext.size() != 2) throw Error(ErrorCode::kInvalidArgument, "center_half_extent needs 2 values");
    c.center_half_width = ext[0];
    c.center_half_height = ext[1];
    expected = header.at("n").get<std::size_t>();
    c.n = static_cast<int>(expected);
    return 0;
  });
  d.object = make_object(d.config.object);

  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    const json j = parse_line(text, line);
    d.samples.push_back(at_line(line, [&] {
      ToySample s;
      s.observation = j.at("observation").get<std::vector<double>>();
      if (s.observation.size() != static_cast<std::size_t>(kObservationWidth)) {
        throw Error(ErrorCode::kWidthMismatch, "observation must have 10 entries");
      }
      s.gt_rotation = quat_from(j.at("gt_rotation"));
      s.gt_depth = j.at("gt_depth").get<double>();
      const auto bc = j.at("bbox_center").get<std::vector<double>>();
      if (bc.size() != 2) throw Error(ErrorCode::kInvalidArgument, "bbox_center needs 2 values");
      s.bbox_center = {bc[0], bc[1]};
      const auto k = j.at("intrinsics").get<std::vector<double>>();
      if (k.size() != 4) throw Error(ErrorCode::kInvalidArgument, "intrinsics needs 4 values");
      s.intrinsics = {k[0], k[1], k[2], k[3]};
      s.ambiguous_gt = j.at("ambiguous_gt").get<bool>();
      if (j.contains("gt_axis_camera") && !j.at("gt_axis_camera").is_null()) {
        const auto a = j.at("gt_axis_camera").get<std::vector<double>>();
        if (a.size() != 3) throw Error(ErrorCode::kInvalidArgument, "gt_axis_camera needs 3 values");
        s.gt_axis_camera = Eigen::Vector3d(a[0], a[1], a[2]);
      }
      return s;
    }));
  }
  if (d.samples.size() != expected) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": header announces " +
                                       std::to_string(expected) + " samples, found " +
                                       std::to_string(d.samples.size()));
  }
  return d;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  auto out = open_out(path);
  write_dataset(out, dataset);
}

Dataset load_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dataset(in);
}

json train_config_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"learning_rate_end", c.learning_rate_end},
          {"epsilon_start", c.epsilon_start},
          {"epsilon_end", c.epsilon_end},
          {"lambda_depth", c.lambda_depth},
          {"dropout_p", c.dropout_p},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j, ModelSpec* spec) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "line 1: training config must be an object");
  TrainConfig c;
  return at_line(1, [&] {
    for (const auto& [key, value] : j.items()) {
      if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "learning_rate_end") c.learning_rate_end = value.get<double>();
      else if (key == "epsilon_start") c.epsilon_start = value.get<double>();
      else if (key == "epsilon_end") c.epsilon_end = value.get<double>();
      else if (key == "lambda_depth") c.lambda_depth = value.get<double>();
      else if (key == "dropout_p") c.dropout_p = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "hidden" && spec != nullptr) spec->hidden = value.get<std::vector<int>>();
      else if (key == "model_seed" && spec != nullptr) spec->seed = value.get<std::uint64_t>();
      else throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
    }
    return c;
  });
}

void write_model(std::ostream& out, const RegressorModel& model, const TrainConfig& config) {
  json j = {
      {"format", kModelFormat},
      {"layer_sizes", model.layer_sizes()},
      {"hypotheses", model.num_hypotheses()},
      {"seed", model.spec().seed},
      {"activation", {{"hidden", "leaky-relu"}, {"slope", kLeakySlope}, {"output", "linear"}}},
      {"train_config", train_config_json(config)},
      {"parameters", model.parameters()},
  };
  out << j.dump() << '\n';
}

RegressorModel read_model(std::istream& in, TrainConfig* config) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const json j = parse_line(buffer.str(), 1);
  check_format(j, kModelFormat, 1);
  return at_line(1, [&] {
    const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (sizes.size() < 2) throw Error(ErrorCode::kInvalidArgument, "model needs at least one layer");
    ModelSpec spec;
    spec.input_width = sizes.front();
    spec.hidden.assign(sizes.begin() + 1, sizes.end() - 1);
    spec.hypotheses = j.at("hypotheses").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (sizes.back() != spec.hypotheses * kOutputsPerHypothesis) {
      throw Error(ErrorCode::kWidthMismatch, "output width must be 5 * hypotheses");
    }
    RegressorModel model(spec);
    model.set_parameters(j.at("parameters").get<std::vector<double>>());
    if (!model.all_finite()) throw Error(ErrorCode::kInvalidArgument, "non-finite parameters");
    if (config != nullptr && j.contains("train_config")) {
      *config = train_config_from_json(j.at("train_config"));
    }
    return model;
  });
}

void save_model(const std::filesystem::path& path, const RegressorModel& model,
                const TrainConfig& config) {
  auto out = open_out(path);
  write_model(out, model, config);
}

RegressorModel load_model(const std::filesystem::path& path, TrainConfig* config) {
  auto in = open_in(path);
  return read_model(in, config);
}

json train_log_json(const TrainLog& log, const TrainConfig& config, int hypotheses) {
  json epochs = json::array();
  for (const auto& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"epsilon", e.epsilon},
                      {"mean_loss", e.mean_loss},
                      {"winner_histogram", e.winner_histogram}});
  }
  return {{"format", kTrainLogFormat},
          {"hypotheses", hypotheses},
          {"train_config", train_config_json(config)},
          {"epochs", epochs}};
}

json report_json(const EvalReport& r) {
  const auto& a = r.aggregates;
  json bins = json::array();
  for (const auto& b : r.confidence) {
    bins.push_back({{"sigma_below", std::isinf(b.upper) ? json("inf") : json(b.upper)},
                    {"count", b.count},
                    {"mean_rot_err_deg", opt_json(b.mean_rot_err_deg)}});
  }
  json records = json::array();
  for (const auto& s : r.records) {
    records.push_back({{"add_err", s.add_err},
                       {"adi_err", s.adi_err},
                       {"add_pass", s.add_pass},
                       {"adi_pass", s.adi_pass},
                       {"rot_err_deg", s.rot_err_deg},
                       {"trans_err_mm", s.trans_err_mm},
                       {"ambiguous_pred", s.ambiguous_pred},
                       {"ambiguous_gt", s.ambiguous_gt},
                       {"axis_dev_deg", opt_json(s.axis_dev_deg)},
                       {"confidence_sigma", s.confidence_sigma}});
  }
  return {
      {"format", kReportFormat},
      {"metadata",
       {{"object", r.object},
        {"hypotheses", r.hypotheses},
        {"pca_threshold", r.inference.pca_threshold},
        {"threshold_scaled_by_sqrt_m_over_30", r.inference.scale_threshold},
        {"singular_value_index", r.inference.singular_value_index},
        {"meanshift_bandwidth", r.inference.meanshift_bandwidth},
        {"cluster_selection", to_string(r.inference.cluster_selection)},
        {"min_depth_m", r.inference.min_depth},
        {"notes",
         {"confidence sigma is the RMS geodesic quaternion distance to the Karcher mean; "
          "the bin thresholds are assumed to be radians",
          "clusters are chosen by a renderer-free rule instead of contour checks; whether "
          "contour checks would pick differently on the toy objects is unknown"}}}},
      {"aggregates",
       {{"count", a.count},
        {"add_acc", a.add_acc},
        {"adi_acc", a.adi_acc},
        {"mean_add_err", a.mean_add_err},
        {"mean_adi_err", a.mean_adi_err},
        {"mean_rot_err_deg", a.mean_rot_err_deg},
        {"mean_trans_err_mm", a.mean_trans_err_mm},
        {"acc_unambiguous", opt_json(a.ambiguity.acc_unambiguous)},
        {"acc_ambiguous", opt_json(a.ambiguity.acc_ambiguous)},
        {"mean_axis_dev_deg", opt_json(a.ambiguity.mean_axis_dev)}}},
      {"confidence_bins", bins},
      {"records", records},
  };
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "index,add_err,adi_err,add_pass,adi_pass,rot_err_deg,trans_err_mm,ambiguous_pred,"
         "ambiguous_gt,axis_dev_deg,confidence_sigma\n";
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& s = r.records[i];
    out << i << ',' << fmt(s.add_err) << ',' << fmt(s.adi_err) << ',' << int(s.add_pass) << ','
        << int(s.adi_pass) << ',' << fmt(s.rot_err_deg) << ',' << fmt(s.trans_err_mm) << ','
        << int(s.ambiguous_pred) << ',' << int(s.ambiguous_gt) << ',' << opt_fmt(s.axis_dev_deg)
        << ',' << fmt(s.confidence_sigma) << '\n';
  }
  return out.str();
}

std::vector<HypothesisSet> read_hypotheses(std::istream& in) {
  std::vector<HypothesisSet> sets;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = parse_line(text, line);
    sets.push_back(at_line(line, [&] {
      HypothesisSet h;
      for (const auto& q : j.at("rotations")) h.rotations.push_back(to_hemisphere(quat_from(q)));
      if (h.rotations.empty()) throw Error(ErrorCode::kEmptyInput, "no rotations");
      if (j.contains("depths")) {
        h.depths = j.at("depths").get<std::vector<double>>();
        if (h.depths.size() != h.rotations.size()) {
          throw Error(ErrorCode::kWidthMismatch, "one depth per rotation is required");
        }
      } else {
        h.depths.assign(h.rotations.size(), 1.0);
      }
      return h;
    }));
  }
  if (sets.empty()) throw Error(ErrorCode::kParse, "line 0: no hypothesis sets");
  return sets;
}

void write_hypotheses(std::ostream& out, const std::vector<HypothesisSet>& sets) {
  for (const auto& h : sets) {
    json rot = json::array();
    for (const auto& q : h.rotations) rot.push_back(quat_json(q));
    out << json{{"rotations", rot}, {"depths", h.depths}}.dump() << '\n';
  }
}

json ambiguity_json(const AmbiguityReport& r) {
  return {{"ambiguous", r.ambiguous},
          {"singular_values",
           {r.singular_values[0], r.singular_values[1], r.singular_values[2], r.singular_values[3]}},
          {"axis", r.axis ? vec_json(r.axis->vector()) : json(nullptr)},
          {"axis_residual", r.axis_residual},
          {"degenerate_axis", r.degenerate_axis}};
}

json clusters_json(const ClusterSet& c) {
  json modes = json::array();
  for (const auto& q : c.modes) modes.push_back(quat_json(q));
  return {{"count", c.size()},
          {"modes", modes},
          {"counts", c.member_counts},
          {"assignments", c.assignments}};
}

json inference_json(const InferenceResult& r) {
  json fused = json::array();
  for (const auto& f : r.fused) {
    fused.push_back({{"rotation", quat_json(f.rotation)},
                     {"depth", f.depth},
                     {"members", f.members},
                     {"dispersion", f.dispersion}});
  }
  return {{"rotation", quat_json(r.pose.rotation)},
          {"translation", vec_json(r.pose.translation)},
          {"depth", r.depth},
          {"threshold_used", r.threshold_used},
          {"ambiguity", ambiguity_json(r.ambiguity)},
          {"clusters", r.clusters ? clusters_json(*r.clusters) : json(nullptr)},
          {"fused", fused},
          {"selected", r.selected},
          {"confidence_sigma", r.confidence_sigma}};
}

json bingham_json(const BinghamParams& p, const EquatorialPlot& plot) {
  json orientation = json::array();
  for (int r = 0; r < 4; ++r) {
    orientation.push_back({p.orientation(r, 0), p.orientation(r, 1), p.orientation(r, 2),
                           p.orientation(r, 3)});
  }
  json points = json::array();
  for (const auto& v : plot.points) points.push_back(vec_json(v));
  return {{"orientation", orientation},
          {"concentrations",
           {p.concentrations[0], p.concentrations[1], p.concentrations[2], p.concentrations[3]}},
          {"log_norm", p.log_norm},
          {"saturated", p.saturated},
          {"mode", {plot.mode[0], plot.mode[1], plot.mode[2], plot.mode[3]}},
          {"points", points},
          {"grid",
           {{"res", plot.grid_res},
            {"layout", "rows: polar angle over (0, pi), cols: azimuth over (0, 2 pi), cell centres"},
            {"values", plot.grid_values}}},
          {"projection_basis", "orientation columns 2..4; the most concentrated direction is dropped"}};
}

std::string bingham_points_csv(const std::vector<EquatorialPlot>& plots) {
  std::ostringstream out;
  out << "set,x,y,z\n";
  for (std::size_t s = 0; s < plots.size(); ++s) {
    for (const auto& v : plots[s].points) {
      out << s << ',' << fmt(v.x()) << ',' << fmt(v.y()) << ',' << fmt(v.z()) << '\n';
    }
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace posekit
