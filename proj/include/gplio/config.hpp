#pragma once

// YAML scenario configuration. One file describes the simulated world, the
// sensor suite, the estimator settings, and output options; unknown keys are
// rejected so typos fail loudly instead of silently using defaults.

#include <stdexcept>
#include <string>

#include "gplio/estimator.hpp"
#include "gplio/sim.hpp"

namespace gplio {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

struct OutputConfig {
  double sample_period = 0.01;  // spacing of exported trajectory samples [s]
};

// Map parameters as configured for live estimation.  The plane-thickness
// gate is opened up relative to the MapParams structure default so that
// local fits through points carrying full sensor range noise (default
// sigma 0.02 m) are still accepted.
inline MapParams scenario_map_defaults() {
  MapParams m;
  m.plane_max_thickness = 0.06;
  return m;
}

struct ScenarioConfig {
  SimInputs sim;

  // Estimator knobs; resolved into an EstimatorConfig by estimator().
  std::string rotation_model = "gyro_aided";
  std::string translation_model = "accel_aided";
  double knot_spacing = 0.04;  // [s]
  int window = 3;              // sliding-window length in segments
  double init_span = 0.3;      // stationary span used for initialization [s]
  double qc_rotation = 1e-2;
  double qc_translation = 1e-1;
  double qc_gyro_bias = 1e-5;
  double qc_accel_bias = 1e-5;
  NoiseModel noise;
  AnchorSigmas anchor;
  MapParams map = scenario_map_defaults();
  int max_iterations = 8;
  double step_tol = 1e-4;
  double corr_max_dist = 1.0;
  double insert_gate = 0.03;  // max |plane residual| for map insertion [m]
  OutputConfig output;

  // Build the full estimator configuration (state layout, extrinsics, prior)
  // from the scenario. Throws ConfigError on inconsistent settings.
  EstimatorConfig estimator() const;
};

ScenarioConfig parse_scenario(const std::string &yaml_text);
ScenarioConfig load_scenario(const std::string &path);
std::string dump_scenario(const ScenarioConfig &cfg);
void save_scenario(const std::string &path, const ScenarioConfig &cfg);

}  // namespace gplio
