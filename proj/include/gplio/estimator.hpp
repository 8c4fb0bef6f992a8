#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gplio/factors.hpp"
#include "gplio/gp_prior.hpp"
#include "gplio/measurement.hpp"
#include "gplio/solver.hpp"
#include "gplio/trajectory.hpp"
#include "gplio/voxel_map.hpp"

// Sliding-window continuous-time lidar-inertial estimator.
//
// After a stationary initialization span (gravity, gyro biases, map seed),
// measurements are consumed one knot interval at a time: a new knot is
// appended by propagating the motion prior, Gauss-Newton (with Levenberg
// damping on rejected steps) refines all knots in the window, and once the
// window exceeds its configured length the oldest knot is folded into a
// Gaussian marginal prior via the Schur complement, its lidar points are
// committed to the map at the converged poses, and the knot is archived.

namespace gplio {

struct NoiseModel {
  double lidar_sigma = 0.02;   // meters, point-to-plane
  double gyro_sigma = 1e-3;    // rad/s per axis
  double accel_sigma = 1e-2;   // m/s^2 per axis
};

struct AnchorSigmas {
  // Standard deviations of the Gaussian anchor on the first knot.
  double rot = 1e-2;
  double omega = 1e-1;
  double pos = 1e-2;
  double vel = 1e-1;
  double acc = 1.0;
  double gyro_bias = 1e-2;
  double accel_bias = 1e-2;
};

struct EstimatorConfig {
  StateConfig state;
  Extrinsics extrinsics;
  HybridPrior prior;  // bias counts are overwritten from `state`
  NoiseModel noise;
  MapParams map;
  AnchorSigmas anchor;

  int window_segments = 3;
  int64_t knot_spacing_ns = 40'000'000;  // 0.04 s
  double init_span = 0.3;                // seconds
  Eigen::Vector3d gravity_default{0.0, 0.0, 9.81};

  int max_iterations = 8;
  double step_tol = 1e-4;
  double lambda_init = 1e-4;
  double lambda_factor = 10.0;
  int max_lambda_steps = 8;
  double corr_max_dist = 1.0;       // gate on point-to-plane distance, meters
  // A committed point must either open new coverage (no valid local plane)
  // or confirm an existing surface to within this distance.  Keeping
  // out-of-tolerance duplicates of known surfaces out of the map stops
  // estimation error from echoing back through later associations.
  double insert_gate = 0.03;        // meters
  double divergence_step = 1e3;     // reject a solve whose step exceeds this
  double init_var_warn = 0.25;      // accel variance gate for the still check
  int cull_every = 25;              // slides between map culls
  int threads = 1;
};

struct InitSummary {
  int64_t t0_ns = 0;
  int64_t knot0_ns = 0;
  Eigen::Vector3d gravity = Eigen::Vector3d::Zero();
  bool gravity_from_accel = false;
  bool stationary_warning = false;
  int map_points = 0;
  int gyro_samples = 0;
  int accel_samples = 0;
};

struct SegmentSummary {
  int index = 0;
  int64_t t0_ns = 0, t1_ns = 0;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  double energy = 0.0;
  double step_norm = 0.0;
  double lambda = 0.0;
  int lidar_used = 0, gyro_used = 0, accel_used = 0, saturated_skipped = 0;
};

class Estimator {
 public:
  explicit Estimator(const EstimatorConfig &cfg);

  // Receives one JSON line per solver iteration / lifecycle event.
  void set_diagnostics_sink(std::function<void(const std::string &)> sink) {
    sink_ = std::move(sink);
  }

  // t0_ns is the start of the initialization span; the first knot is placed
  // at t0_ns + init_span.
  InitSummary initialize(const std::vector<Record> &init_records,
                         int64_t t0_ns);
  SegmentSummary process_segment(const MeasurementBatch &batch);
  void finish();  // moves remaining window knots to the archive

  const Trajectory &window() const { return traj_; }
  const std::vector<KnotState> &archive() const { return archive_; }
  const VoxelMap &map() const { return map_; }
  VoxelMap &map() { return map_; }
  const Eigen::Vector3d &gravity() const { return gravity_; }
  bool any_divergence() const { return any_divergence_; }
  int64_t knot0_ns() const { return knot0_ns_; }
  int64_t next_segment_start_ns() const;

  // Full estimate over archive + window; throws outside the covered span.
  KnotState state_at(int64_t t_ns) const;
  // Knot-time plus fixed-rate samples over the covered half-open span.
  std::vector<KnotState> sample(int64_t step_ns) const;

 private:
  friend struct EstimatorProbe;  // white-box access for diagnostic tools

  struct Corr {  // one associated lidar point
    int seg = 0;
    const Record *rec = nullptr;
    Eigen::Vector3d pt_body;
    PlaneFit fit;
  };

  Eigen::VectorXd anchor_information() const;  // diagonal of K0^{-1}
  void associate(const std::vector<KnotState> &knots, std::vector<Corr> *out,
                 int *gated) const;
  double evaluate_energy(const std::vector<KnotState> &knots,
                         const std::vector<Corr> &corrs) const;
  void assemble(const std::vector<KnotState> &knots,
                const std::vector<Corr> &corrs, NormalEquations *ne,
                SegmentSummary *sum) const;
  void marginalize_front();
  void emit(const std::string &line) const {
    if (sink_) sink_(line);
  }

  EstimatorConfig cfg_;
  StateLayout layout_;
  Trajectory traj_;
  std::deque<MeasurementBatch> window_batches_;  // one per window segment
  std::vector<KnotState> archive_;
  VoxelMap map_;

  // Gaussian prior on the oldest window knot: information marg_H_ and
  // gradient marg_b_ about the linearization point marg_lin_.
  KnotState marg_lin_;
  Eigen::MatrixXd marg_H_;
  Eigen::VectorXd marg_b_;
  bool marg_valid_ = false;

  Eigen::MatrixXd gp_weight_;  // process-noise inverse for one knot interval
  Eigen::Vector3d gravity_ = Eigen::Vector3d::Zero();
  int64_t knot0_ns_ = 0;
  int segment_index_ = 0;
  int slides_since_cull_ = 0;
  bool initialized_ = false;
  bool any_divergence_ = false;
  std::function<void(const std::string &)> sink_;
};

struct RunOutcome {
  int exit_code = 0;  // 0 success, 4 divergence was flagged
  InitSummary init;
  std::vector<SegmentSummary> segments;
  std::size_t dropped_records = 0;
  double wall_seconds = 0.0;
};

// Offline driver: splits time-sorted records into the initialization span and
// knot-interval segments, and feeds them through the estimator.
RunOutcome run_offline(Estimator &est, const std::vector<Record> &records,
                       double init_span, int64_t knot_spacing_ns);

}  // namespace gplio
