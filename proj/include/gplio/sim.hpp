#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gplio/measurement.hpp"

// Synthetic data generation and trajectory evaluation: analytic ground-truth
// motions, a planar-patch world with ray casting, sensor samplers with noise,
// per-point lidar timestamps, saturation and dropout faults, and the absolute
// trajectory error metric used to score runs.

namespace gplio {

/* ---- ground-truth motion ------------------------------------------------- */

struct MotionConfig {
  std::string kind = "figure_eight";
  // stationary | line | spin | figure_eight | waypoints
  double t_start = 0.5;  // hold still until here...
  double t_ramp = 1.0;   // ...then blend the motion in over this long
  Eigen::Vector3d velocity{1.0, 0.0, 0.0};         // line
  Eigen::Vector3d spin_axis{0.0, 0.0, 1.0};        // spin
  double spin_rate = 1.0;                          // rad/s
  Eigen::Vector3d amplitude{1.2, 0.8, 0.15};       // figure_eight, meters
  double frequency = 0.15;                         // figure_eight, Hz
  Eigen::Vector3d rot_amplitude{0.10, 0.15, 0.50}; // rad, per axis
  Eigen::Vector3d rot_frequency{0.23, 0.17, 0.20}; // Hz, per axis
  std::vector<Eigen::Vector3d> waypoints;          // waypoints
  double waypoint_spacing = 2.0;                   // seconds between waypoints
};

class TruthMotion {
 public:
  struct State {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d w = Eigen::Vector3d::Zero();  // body angular rate
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    Eigen::Vector3d a = Eigen::Vector3d::Zero();
  };

  explicit TruthMotion(const MotionConfig &cfg);
  State at(double t) const;

 private:
  // Warped time s(t): 0 before t_start, then blended so ds/dt ramps from 0
  // to 1 with three continuous derivatives.
  void warp(double t, double *s, double *ds, double *dds) const;

  MotionConfig cfg_;
};

/* ---- world --------------------------------------------------------------- */

// Rectangular patch: corner plus two orthogonal edge vectors.
struct Patch {
  Eigen::Vector3d corner = Eigen::Vector3d::Zero();
  Eigen::Vector3d edge_u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d edge_v = Eigen::Vector3d::UnitY();
};

class PlaneWorld {
 public:
  explicit PlaneWorld(std::vector<Patch> patches);

  // Distance along unit direction dir to the nearest patch, if any.
  std::optional<double> raycast(const Eigen::Vector3d &origin,
                                const Eigen::Vector3d &dir,
                                double max_range) const;

  const std::vector<Patch> &patches() const { return patches_; }

  // Floor plus two perpendicular walls meeting near (dist, dist, -1):
  // fully constrains all six degrees of freedom.
  static PlaneWorld corner_room(double extent, double dist);

 private:
  struct Prepared {
    Patch patch;
    Eigen::Vector3d n, u_hat, v_hat;
    double u_len, v_len;
  };
  std::vector<Prepared> patches_prep_;
  std::vector<Patch> patches_;
};

/* ---- sensors and faults -------------------------------------------------- */

struct LidarSpec {
  double rate = 10.0;  // scans per second
  int rings = 32;
  int columns = 128;
  double elev_min_deg = -75.0;
  double elev_max_deg = 30.0;
  double azimuth_min_deg = 0.0;    // restrict to model a narrow field of view
  double azimuth_max_deg = 360.0;
  double min_range = 0.5;
  double max_range = 60.0;
  double sigma = 0.02;  // range noise, meters
  Eigen::Isometry3d extrinsic = Eigen::Isometry3d::Identity();  // body <- lidar
};

struct ImuSpec {
  double rate = 200.0;
  double sigma = 1e-3;            // per-axis noise
  double saturation = 17.5;       // clip level per axis; <=0 disables
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();  // body-frame true bias
  Eigen::Matrix3d extrinsic = Eigen::Matrix3d::Identity();  // body <- sensor
};

struct FaultSpec {
  SensorKind kind = SensorKind::kGyro;
  int sensor = 0;
  double begin = 0.0;  // dropout interval [begin, end)
  double end = 0.0;
};

struct SimInputs {
  uint64_t seed = 1;
  double duration = 30.0;
  Eigen::Vector3d gravity{0.0, 0.0, 9.81};
  MotionConfig motion;
  std::vector<Patch> patches;
  std::vector<LidarSpec> lidars;
  std::vector<ImuSpec> gyros;
  std::vector<ImuSpec> accels;
  std::vector<FaultSpec> faults;
  double truth_rate = 100.0;
};

struct PoseSample {
  int64_t t_ns = 0;
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
};

struct SimResult {
  std::vector<Record> records;  // sorted by (time, kind, sensor)
  std::vector<PoseSample> truth;
  std::size_t saturated = 0;
  std::size_t dropped = 0;  // samples swallowed by dropout faults
};

SimResult simulate(const SimInputs &in);

/* ---- evaluation ---------------------------------------------------------- */

struct AteResult {
  int matched = 0;
  double rmse = 0.0;
  double mean = 0.0;
  double max = 0.0;
  Eigen::Vector3d per_axis_rmse = Eigen::Vector3d::Zero();
  double rot_rmse_deg = 0.0;
  Eigen::Isometry3d alignment = Eigen::Isometry3d::Identity();
};

// Associates estimate and truth by nearest timestamp (within max_gap_ns),
// aligns with a rigid Umeyama fit, and reports translational and rotational
// error statistics.
AteResult evaluate_ate(const std::vector<PoseSample> &estimate,
                       const std::vector<PoseSample> &truth,
                       int64_t max_gap_ns = 5'000'000);

}  // namespace gplio
