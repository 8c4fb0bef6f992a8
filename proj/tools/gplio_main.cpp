// Command-line front end: simulate scenarios, run the estimator over recorded
// streams, and score trajectories against ground truth.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 the estimator
// flagged a divergence (outputs are still written).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gplio/config.hpp"
#include "gplio/estimator.hpp"
#include "gplio/io.hpp"
#include "gplio/sim.hpp"
#include "gplio/trajectory.hpp"

namespace {

using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

int thread_override() {
  const char *env = std::getenv("GPLIO_THREADS");
  if (!env) return 0;
  const int n = std::atoi(env);
  return n > 0 ? n : 0;
}

json vec3_json(const Eigen::Vector3d &v) { return json::array({v.x(), v.y(), v.z()}); }

int cmd_simulate(const std::string &config_path, const std::string &out_dir) {
  const gplio::ScenarioConfig cfg = gplio::load_scenario(config_path);
  const gplio::SimResult res = gplio::simulate(cfg.sim);
  std::filesystem::create_directories(out_dir);
  gplio::write_records(out_dir + "/streams.txt", res.records);
  gplio::write_tum(out_dir + "/truth.tum", res.truth);

  json summary;
  summary["records"] = res.records.size();
  summary["truth_samples"] = res.truth.size();
  summary["saturated"] = res.saturated;
  summary["dropped"] = res.dropped;
  summary["streams"] = out_dir + "/streams.txt";
  summary["truth"] = out_dir + "/truth.tum";
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_estimate(const std::string &config_path, const std::string &streams_path,
                 const std::string &out_dir, const std::string &truth_path) {
  const gplio::ScenarioConfig cfg = gplio::load_scenario(config_path);
  gplio::EstimatorConfig ec = cfg.estimator();
  if (const int n = thread_override(); n > 0) ec.threads = n;

  std::vector<gplio::Record> records = gplio::read_records(streams_path);
  if (records.empty()) throw gplio::ParseError("no records in " + streams_path);
  std::stable_sort(records.begin(), records.end(),
                   [](const gplio::Record &a, const gplio::Record &b) {
                     return a.t_ns < b.t_ns;
                   });

  std::filesystem::create_directories(out_dir);
  std::ofstream diag(out_dir + "/diagnostics.jsonl");
  gplio::Estimator est(ec);
  est.set_diagnostics_sink([&diag](const std::string &line) { diag << line << "\n"; });

  const gplio::RunOutcome outcome =
      gplio::run_offline(est, records, cfg.init_span, ec.knot_spacing_ns);

  const std::vector<gplio::KnotState> samples =
      est.sample(gplio::to_ns(cfg.output.sample_period));
  std::vector<gplio::PoseSample> poses;
  poses.reserve(samples.size());
  for (const auto &k : samples)
    poses.push_back({k.t_ns, k.pose()});
  gplio::write_tum(out_dir + "/trajectory.tum", poses);
  est.map().write_ply(out_dir + "/map.ply");

  json report;
  report["exit_code"] = outcome.exit_code;
  report["wall_seconds"] = outcome.wall_seconds;
  report["segments"] = outcome.segments.size();
  report["dropped_records"] = outcome.dropped_records;
  report["map_points"] = est.map().size();
  report["gravity"] = vec3_json(est.gravity());
  report["init"] = {
      {"t0", gplio::to_sec(outcome.init.t0_ns)},
      {"first_knot", gplio::to_sec(outcome.init.knot0_ns)},
      {"gravity_from_accel", outcome.init.gravity_from_accel},
      {"stationary_warning", outcome.init.stationary_warning},
      {"map_points", outcome.init.map_points},
  };
  int converged = 0, diverged = 0;
  std::size_t lidar_used = 0, gyro_used = 0, accel_used = 0, sat_skipped = 0;
  for (const auto &s : outcome.segments) {
    converged += s.converged ? 1 : 0;
    diverged += s.diverged ? 1 : 0;
    lidar_used += s.lidar_used;
    gyro_used += s.gyro_used;
    accel_used += s.accel_used;
    sat_skipped += s.saturated_skipped;
  }
  report["segments_converged"] = converged;
  report["segments_diverged"] = diverged;
  report["lidar_factors"] = lidar_used;
  report["gyro_factors"] = gyro_used;
  report["accel_factors"] = accel_used;
  report["saturated_skipped"] = sat_skipped;

  if (!truth_path.empty()) {
    const auto truth = gplio::read_tum(truth_path);
    const gplio::AteResult ate = gplio::evaluate_ate(poses, truth);
    report["ate"] = {
        {"matched", ate.matched},        {"rmse", ate.rmse},
        {"mean", ate.mean},              {"max", ate.max},
        {"per_axis_rmse", vec3_json(ate.per_axis_rmse)},
        {"rot_rmse_deg", ate.rot_rmse_deg},
    };
  }

  std::ofstream rep(out_dir + "/run_report.json");
  rep << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return outcome.exit_code;
}

int cmd_evaluate(const std::string &estimate_path, const std::string &truth_path,
                 double max_gap, const std::string &report_path) {
  const auto estimate = gplio::read_tum(estimate_path);
  const auto truth = gplio::read_tum(truth_path);
  const gplio::AteResult ate =
      gplio::evaluate_ate(estimate, truth, gplio::to_ns(max_gap));
  json out;
  out["matched"] = ate.matched;
  out["rmse"] = ate.rmse;
  out["mean"] = ate.mean;
  out["max"] = ate.max;
  out["per_axis_rmse"] = vec3_json(ate.per_axis_rmse);
  out["rot_rmse_deg"] = ate.rot_rmse_deg;
  if (!report_path.empty()) {
    std::ofstream rep(report_path);
    rep << out.dump(2) << "\n";
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Continuous-time lidar-inertial estimation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", streams_path, truth_path;
  std::string estimate_path, report_path;
  double max_gap = 0.005;

  CLI::App *sim = app.add_subcommand("simulate", "Generate synthetic streams");
  sim->add_option("--config", config_path, "Scenario YAML")->required();
  sim->add_option("--out-dir", out_dir, "Output directory");

  CLI::App *est = app.add_subcommand("estimate", "Run the estimator");
  est->add_option("--config", config_path, "Scenario YAML")->required();
  est->add_option("--streams", streams_path, "Measurement stream file")->required();
  est->add_option("--out-dir", out_dir, "Output directory");
  est->add_option("--truth", truth_path, "Optional ground-truth TUM file");

  CLI::App *eval = app.add_subcommand("evaluate", "Score a trajectory");
  eval->add_option("--estimate", estimate_path, "Estimated TUM file")->required();
  eval->add_option("--truth", truth_path, "Ground-truth TUM file")->required();
  eval->add_option("--max-gap", max_gap, "Max timestamp gap for matching [s]");
  eval->add_option("--report", report_path, "Also write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir);
    if (est->parsed())
      return cmd_estimate(config_path, streams_path, out_dir, truth_path);
    return cmd_evaluate(estimate_path, truth_path, max_gap, report_path);
  } catch (const gplio::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gplio::ParseError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
