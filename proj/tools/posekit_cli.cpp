// posekit command-line driver: data generation, training, evaluation and analysis.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "posekit/bingham.hpp"
#include "posekit/errors.hpp"
#include "posekit/experiment.hpp"
#include "posekit/pipeline.hpp"
#include "posekit/serialization.hpp"

namespace {

using namespace posekit;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("POSEKIT_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != std::string(s).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("POSEKIT_SEED is not an integer: ") + s);
  }
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kVersion:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kWidthMismatch:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kInsufficientHypotheses:
      return kExitConfig;
    default:
      return kExitNumerical;
  }
}

std::filesystem::path with_extension(std::filesystem::path p, const char* ext) {
  return p.replace_extension(ext);
}

struct InferenceFlags {
  std::optional<double> threshold;
  std::optional<double> bandwidth;
  std::string selection = "largest-membership";
  int sv_index = 2;
  bool no_scaling = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--threshold", threshold, "PCA singular-value threshold (calibrated for M=30)");
    cmd->add_option("--bandwidth", bandwidth, "mean shift bandwidth, radians");
    cmd->add_option("--cluster-selection", selection, "largest-membership | lowest-dispersion");
    cmd->add_option("--sv-index", sv_index, "1-based singular value tested against the threshold");
    cmd->add_flag("--no-threshold-scaling", no_scaling, "do not rescale the threshold by sqrt(M/30)");
  }

  InferenceConfig build(ObjectKind kind) const {
    InferenceConfig c = default_inference(kind);
    if (threshold) c.pca_threshold = *threshold;
    if (bandwidth) c.meanshift_bandwidth = *bandwidth;
    c.cluster_selection = parse_cluster_selection(selection);
    c.singular_value_index = sv_index;
    c.scale_threshold = !no_scaling;
    return c;
  }
};

struct TrainFlags {
  std::string config_path;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<double> learning_rate_end;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "training config JSON");
    cmd->add_option("--epochs", epochs, "number of epochs (overrides the config)");
    cmd->add_option("--lr", learning_rate, "learning rate (overrides the config)");
    cmd->add_option("--lr-end", learning_rate_end, "final learning rate of a linear decay");
  }

  TrainConfig build(ModelSpec& spec) const {
    TrainConfig c;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open config '" + config_path + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kParse, "line 1: " + std::string(e.what()));
      }
      c = train_config_from_json(j, &spec);
    }
    if (epochs) c.epochs = *epochs;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (learning_rate_end) c.learning_rate_end = *learning_rate_end;
    if (const auto s = env_seed()) {
      c.seed = *s;
      spec.seed = *s;
    }
    return c;
  }
};

std::vector<HypothesisSet> load_hypotheses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path + "'");
  return read_hypotheses(in);
}

void print_aggregates(std::ostream& out, const EvalReport& r) {
  const auto& a = r.aggregates;
  out << "object " << r.object << ", M = " << r.hypotheses << ", " << a.count << " samples\n"
      << "  ADD acc " << a.add_acc << ", ADI acc " << a.adi_acc << "\n"
      << "  mean rot err " << a.mean_rot_err_deg << " deg, mean trans err " << a.mean_trans_err_mm
      << " mm\n";
  if (a.ambiguity.acc_unambiguous) out << "  unambiguous views classified " << *a.ambiguity.acc_unambiguous << "\n";
  if (a.ambiguity.acc_ambiguous) out << "  ambiguous views classified " << *a.ambiguity.acc_ambiguous << "\n";
  if (a.ambiguity.mean_axis_dev) out << "  mean axis deviation " << *a.ambiguity.mean_axis_dev << " deg\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posekit: multi-hypothesis pose estimation on symmetric toy objects"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a toyset/1 dataset");
  std::string gen_object = "cube";
  int gen_n = 1000;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  DatasetConfig gen_defaults;
  double gen_noise = gen_defaults.noise_sigma;
  gen->add_option("--object", gen_object, "cube | cup | cylinder")->required();
  gen->add_option("--n", gen_n, "number of samples")->required();
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--noise", gen_noise, "observation noise sigma");
  gen->add_option("--out", gen_out, "output file")->required();

  // train
  auto* tr = app.add_subcommand("train", "train a multi-hypothesis model");
  std::string tr_data, tr_out, tr_log;
  int tr_m = 30;
  TrainFlags tr_flags;
  tr->add_option("--data", tr_data, "toyset/1 training file")->required();
  tr->add_option("--m", tr_m, "number of hypotheses")->required();
  tr->add_option("--out", tr_out, "model output file")->required();
  tr->add_option("--log", tr_log, "training log JSON (default: <out>.log.json)");
  tr_flags.add_to(tr);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a model on a dataset");
  std::string ev_data, ev_model, ev_report;
  InferenceFlags ev_flags;
  ev->add_option("--data", ev_data, "toyset/1 test file")->required();
  ev->add_option("--model", ev_model, "mhp-model/1 file")->required();
  ev->add_option("--report", ev_report, "report path; JSON there, CSV next to it")->required();
  ev_flags.add_to(ev);

  // analyze
  auto* an = app.add_subcommand("analyze", "ambiguity analysis of external hypothesis sets");
  std::string an_hyps, an_out, an_object = "cube";
  InferenceFlags an_flags;
  an->add_option("--hypotheses", an_hyps, "hypothesis JSON-lines file")->required();
  an->add_option("--object", an_object, "object whose default bandwidth is used");
  an->add_option("--out", an_out, "output file (default: stdout)");
  an_flags.add_to(an);

  // bingham
  auto* bg = app.add_subcommand("bingham", "fit Bingham densities and export plot data");
  std::string bg_hyps, bg_out;
  int bg_nodes = QuadratureConfig{}.nodes;
  int bg_grid = 24;
  bg->add_option("--hypotheses", bg_hyps, "hypothesis JSON-lines file")->required();
  bg->add_option("--out", bg_out, "plot JSON path; point CSV next to it")->required();
  bg->add_option("--nodes", bg_nodes, "quadrature nodes for the normalising constant");
  bg->add_option("--grid-res", bg_grid, "polar resolution of the density grid");

  // sweep-m
  auto* sw = app.add_subcommand("sweep-m", "hypothesis-count ablation");
  std::string sw_data, sw_test, sw_out, sw_list = "1,2,5,10,20,30,40";
  TrainFlags sw_flags;
  InferenceFlags sw_inf;
  sw->add_option("--data", sw_data, "toyset/1 training file")->required();
  sw->add_option("--test", sw_test, "toyset/1 test file (default: last 10% of --data)");
  sw->add_option("--m-list", sw_list, "comma separated hypothesis counts");
  sw->add_option("--out", sw_out, "table path; JSON there, CSV next to it");
  sw_flags.add_to(sw);
  sw_inf.add_to(sw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      DatasetConfig c;
      c.object = parse_object_kind(gen_object);
      c.n = gen_n;
      c.seed = env_seed().value_or(gen_seed);
      c.noise_sigma = gen_noise;
      save_dataset(gen_out, generate_dataset(c));
    } else if (*tr) {
      const Dataset data = load_dataset(tr_data);
      ModelSpec spec;
      spec.hypotheses = tr_m;
      const TrainConfig config = tr_flags.build(spec);
      RegressorModel model(spec);
      const auto examples = training_examples(data.samples);
      const TrainLog log = train(model, examples, config, [](const EpochStats& e) {
        std::cerr << "epoch " << e.epoch << "  eps " << e.epsilon << "  loss " << e.mean_loss << '\n';
      });
      save_model(tr_out, model, config);
      const std::filesystem::path log_path =
          tr_log.empty() ? std::filesystem::path(tr_out + ".log.json") : std::filesystem::path(tr_log);
      write_text(log_path, train_log_json(log, config, tr_m).dump(2) + "\n");
    } else if (*ev) {
      const Dataset data = load_dataset(ev_data);
      const RegressorModel model = load_model(ev_model);
      const EvalReport report =
          evaluate(model, data.object, data.samples, ev_flags.build(data.config.object));
      write_text(ev_report, report_json(report).dump(2) + "\n");
      write_text(with_extension(ev_report, ".csv"), report_csv(report));
      print_aggregates(std::cout, report);
    } else if (*an) {
      const ObjectKind kind = parse_object_kind(an_object);
      const InferenceConfig config = an_flags.build(kind);
      std::ostringstream out;
      for (const auto& h : load_hypotheses(an_hyps)) {
        const InferenceResult r = infer(h, PinholeCamera{}, {PinholeCamera{}.cx, PinholeCamera{}.cy}, config);
        out << json{{"ambiguity", ambiguity_json(r.ambiguity)},
                    {"threshold_used", r.threshold_used},
                    {"clusters", r.clusters ? clusters_json(*r.clusters) : json(nullptr)},
                    {"inference", inference_json(r)}}
                   .dump()
            << '\n';
      }
      if (an_out.empty()) {
        std::cout << out.str();
      } else {
        write_text(an_out, out.str());
      }
    } else if (*bg) {
      BinghamFitOptions options;
      options.quadrature.nodes = bg_nodes;
      json fits = json::array();
      std::vector<EquatorialPlot> plots;
      for (const auto& h : load_hypotheses(bg_hyps)) {
        const BinghamParams p = fit_bingham(h.rotations, options);
        plots.push_back(project_equatorial(p, h.rotations, bg_grid));
        fits.push_back(bingham_json(p, plots.back()));
      }
      write_text(bg_out, json{{"format", kBinghamFormat}, {"fits", fits}}.dump(2) + "\n");
      write_text(with_extension(bg_out, ".csv"), bingham_points_csv(plots));
    } else if (*sw) {
      const Dataset data = load_dataset(sw_data);
      std::vector<ToySample> train_set = data.samples;
      std::vector<ToySample> test_set;
      if (!sw_test.empty()) {
        test_set = load_dataset(sw_test).samples;
      } else {
        const std::size_t cut = train_set.size() - train_set.size() / 10;
        test_set.assign(train_set.begin() + static_cast<std::ptrdiff_t>(cut), train_set.end());
        train_set.resize(cut);
      }
      std::vector<int> counts;
      std::stringstream ss(sw_list);
      for (std::string item; std::getline(ss, item, ',');) {
        try {
          counts.push_back(std::stoi(item));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kInvalidArgument, "bad --m-list entry '" + item + "'");
        }
      }
      ModelSpec spec;
      const TrainConfig config = sw_flags.build(spec);
      const InferenceConfig inf = sw_inf.build(data.config.object);
      json rows = json::array();
      std::ostringstream csv;
      csv << "m,final_loss,add_acc,adi_acc,mean_rot_err_deg,mean_trans_err_mm\n";
      std::cout << "M\tloss\tADD\tADI\trot_deg\ttrans_mm\n";
      sweep_hypotheses(data.object, train_set, test_set, counts, spec, config, inf,
                       [&](const SweepRow& r) {
                         const auto& a = r.aggregates;
                         std::cout << r.hypotheses << '\t' << r.final_loss << '\t' << a.add_acc << '\t'
                                   << a.adi_acc << '\t' << a.mean_rot_err_deg << '\t'
                                   << a.mean_trans_err_mm << std::endl;
                         rows.push_back({{"m", r.hypotheses},
                                         {"final_loss", r.final_loss},
                                         {"add_acc", a.add_acc},
                                         {"adi_acc", a.adi_acc},
                                         {"mean_rot_err_deg", a.mean_rot_err_deg},
                                         {"mean_trans_err_mm", a.mean_trans_err_mm}});
                         csv << r.hypotheses << ',' << json(r.final_loss).dump() << ','
                             << json(a.add_acc).dump() << ',' << json(a.adi_acc).dump() << ','
                             << json(a.mean_rot_err_deg).dump() << ','
                             << json(a.mean_trans_err_mm).dump() << '\n';
                       });
      if (!sw_out.empty()) {
        write_text(sw_out, json{{"object", data.object.id}, {"rows", rows}}.dump(2) + "\n");
        write_text(with_extension(sw_out, ".csv"), csv.str());
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
