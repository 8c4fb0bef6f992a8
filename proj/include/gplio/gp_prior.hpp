#pragma once

#include <vector>

#include <Eigen/Core>

// Linear time-invariant motion priors for one 3-dof channel, and the hybrid
// block-diagonal prior that stacks one channel per state block group:
// rotation (local coordinates), translation, and per-sensor bias channels.
//
// Each channel kind corresponds to white noise entering at a different
// derivative order:
//   kRandomWalk           x = [b],        db = w
//   kConstantVelocity     x = [b, db],    d(db) = w
//   kConstantAcceleration x = [b, db, d2b], d(d2b) = w
// transition() is the deterministic propagator Phi(dt); process_noise() is the
// accumulated covariance Q(dt) for power-spectral density Qc.

namespace gplio {

enum class PriorKind { kRandomWalk, kConstantVelocity, kConstantAcceleration };

// Number of stacked 3-vectors in the channel state (1, 2, or 3).
int prior_blocks(PriorKind kind);

// Scalar (per-axis) transition, b x b with b = prior_blocks(kind); the full
// transition is its Kronecker product with I3.  Requires dt >= 0.
Eigen::MatrixXd transition_scalar(PriorKind kind, double dt);

// Full channel transition Phi(dt), (3b) x (3b).  Requires dt >= 0.
Eigen::MatrixXd transition(PriorKind kind, double dt);

// Channel process noise Q(dt), (3b) x (3b).  Requires dt > 0 and symmetric
// positive-definite qc (3x3).
Eigen::MatrixXd process_noise(PriorKind kind, double dt,
                              const Eigen::Matrix3d &qc);

// Block-diagonal prior over [rotation | translation | gyro biases | accel
// biases].  Rotation supports kRandomWalk/kConstantVelocity, translation all
// three kinds; biases are always random walks, one 3-dof channel per sensor.
struct HybridPrior {
  PriorKind rotation = PriorKind::kConstantVelocity;
  PriorKind translation = PriorKind::kConstantAcceleration;
  int num_gyro_bias = 0;
  int num_accel_bias = 0;
  Eigen::Matrix3d qc_rotation = 1e-2 * Eigen::Matrix3d::Identity();
  Eigen::Matrix3d qc_translation = 1e-1 * Eigen::Matrix3d::Identity();
  Eigen::Matrix3d qc_gyro_bias = 1e-5 * Eigen::Matrix3d::Identity();
  Eigen::Matrix3d qc_accel_bias = 1e-5 * Eigen::Matrix3d::Identity();

  int rotation_dim() const { return 3 * prior_blocks(rotation); }
  int translation_dim() const { return 3 * prior_blocks(translation); }
  int dim() const {
    return rotation_dim() + translation_dim() +
           3 * (num_gyro_bias + num_accel_bias);
  }

  void validate() const;  // throws std::invalid_argument on bad combinations

  Eigen::MatrixXd transition(double dt) const;
  Eigen::MatrixXd process_noise(double dt) const;
};

// Joint covariance of the stacked channel states at the given knot times for
// a chain started with covariance k0 (dim x dim) at times.front().  Times must
// be strictly increasing.  The result's inverse is block-tridiagonal — the
// Markov structure the sliding-window solver relies on.
Eigen::MatrixXd kernel_matrix(const HybridPrior &prior,
                              const std::vector<double> &times,
                              const Eigen::MatrixXd &k0);

}  // namespace gplio
