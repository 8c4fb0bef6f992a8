#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gplio/gp_prior.hpp"

// Per-knot state and its configurable composition.  A knot always carries a
// rotation; depending on the configured motion priors it additionally carries
// body angular rate, position/velocity/acceleration, and one bias 3-vector
// per gyro/accelerometer.  StateLayout maps the active blocks to offsets in
// the per-knot increment vector used by the solver.

namespace gplio {

enum class RotationModel {
  kRandomWalk,         // R only
  kConstantVelocity,   // R, angular rate
  kGyroAided,          // R, angular rate, one bias per gyro
};

enum class TranslationModel {
  kRandomWalk,            // p only
  kConstantVelocity,      // p, v
  kConstantAcceleration,  // p, v, a
  kAccelAided,            // p, v, a, one bias per accelerometer
};

struct StateConfig {
  RotationModel rotation = RotationModel::kGyroAided;
  TranslationModel translation = TranslationModel::kAccelAided;
  int num_lidars = 1;
  int num_gyros = 1;
  int num_accels = 1;

  void validate() const;  // throws std::invalid_argument on inconsistency
};

struct StateLayout {
  // Offsets into the per-knot increment vector; -1 when the block is absent.
  int rot = 0;
  int omega = -1;
  int pos = -1;
  int vel = -1;
  int acc = -1;
  int gyro_bias0 = -1;
  int accel_bias0 = -1;
  int num_gyros = 0;
  int num_accels = 0;
  int dim = 0;
  PriorKind rotation_kind = PriorKind::kConstantVelocity;
  PriorKind translation_kind = PriorKind::kConstantAcceleration;

  static StateLayout make(const StateConfig &cfg);

  bool has_omega() const { return omega >= 0; }
  bool has_vel() const { return vel >= 0; }
  bool has_acc() const { return acc >= 0; }
  int gyro_bias(int i) const { return gyro_bias0 + 3 * i; }
  int accel_bias(int i) const { return accel_bias0 + 3 * i; }
};

struct KnotState {
  int64_t t_ns = 0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> bg;  // one per gyro
  std::vector<Eigen::Vector3d> ba;  // one per accelerometer

  double t() const { return 1e-9 * static_cast<double>(t_ns); }

  static KnotState zero(const StateLayout &layout, int64_t t_ns);
  Eigen::Isometry3d pose() const;
};

// Retraction: rotation block via R * exp(delta_theta), all vector blocks
// additive.  delta must have layout.dim entries.
KnotState boxplus(const KnotState &x, const StateLayout &layout,
                  const Eigen::VectorXd &delta);

// Inverse retraction: rotation block log(base.R^T x.R), vector blocks
// subtracted.
Eigen::VectorXd boxminus(const KnotState &x, const KnotState &base,
                         const StateLayout &layout);

struct Extrinsics {
  std::vector<Eigen::Isometry3d> lidar;     // body <- lidar
  std::vector<Eigen::Matrix3d> gyro;        // body <- gyro
  std::vector<Eigen::Matrix3d> accel;       // body <- accelerometer
};

}  // namespace gplio
