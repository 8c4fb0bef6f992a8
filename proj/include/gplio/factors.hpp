#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gplio/measurement.hpp"
#include "gplio/state.hpp"
#include "gplio/voxel_map.hpp"

// Measurement and motion-prior residuals with analytic Jacobians with respect
// to the increments of the two knots bounding the measurement's segment.
// Jacobians follow the retraction used by boxplus (rotation right-perturbed,
// vectors additive); all are exercised against central differences in the
// test suite.

namespace gplio {

struct FactorBlocks {
  Eigen::VectorXd r;
  Eigen::MatrixXd J1, J2;  // d r / d increment of the left / right knot
};

struct UnaryFactorBlocks {
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
};

// Interpolated state and Jacobian chain at one time inside a segment, shared
// by every factor evaluated at that time.
struct SegmentInterp {
  SegmentInterp(const StateLayout &layout, const KnotState &x1,
                const KnotState &x2, double tau_offset);

  const StateLayout &layout;
  const KnotState &x1, &x2;
  double dt, tau, alpha;

  // Interpolated state.
  Eigen::Matrix3d R_tau;
  Eigen::Vector3d w_tau = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_tau = Eigen::Vector3d::Zero();
  Eigen::Vector3d a_tau = Eigen::Vector3d::Zero();

  // Segment-local rotation chart.
  Eigen::Vector3d theta;      // log(R1^T R2)
  Eigen::Vector3d theta_tau;  // local coordinate at tau
  Eigen::Vector3d s_tau;      // local coordinate rate at tau
  Eigen::Matrix3d exp_theta_tau;
  Eigen::Matrix3d jr_theta_tau;

  // d theta_tau / d {dtheta1, dw1, dtheta2, dw2} and the same for s_tau.
  Eigen::Matrix3d dth_d1, dth_dw1, dth_d2, dth_dw2;
  Eigen::Matrix3d ds_d1, ds_dw1, ds_d2, ds_dw2;

  // Scalar weights of p_tau and a_tau over [p1, v1, a1, p2, v2, a2]
  // (zero where the block is absent).
  double wp[6] = {0, 0, 0, 0, 0, 0};
  double wa[6] = {0, 0, 0, 0, 0, 0};

  Eigen::Vector3d gyro_bias(int i) const {
    return (1.0 - alpha) * x1.bg[i] + alpha * x2.bg[i];
  }
  Eigen::Vector3d accel_bias(int i) const {
    return (1.0 - alpha) * x1.ba[i] + alpha * x2.ba[i];
  }
};

// Point-to-plane residual (1-dof): n . (R_tau * x_b + p_tau - q) with
// x_b the point mapped through the lidar extrinsic.
FactorBlocks lidar_plane_factor(const SegmentInterp &si,
                                const Eigen::Isometry3d &body_from_lidar,
                                const Eigen::Vector3d &pt_lidar,
                                const PlaneFit &plane);

// Gyro residual (3-dof): w_tau + b_g,i(tau) - R_bg * meas.
FactorBlocks gyro_factor(const SegmentInterp &si,
                         const Eigen::Matrix3d &body_from_gyro, int gyro_idx,
                         const Eigen::Vector3d &meas);

// Accelerometer residual (3-dof):
// R_tau^T (a_tau + g) + b_a,i(tau) - R_ba * meas.
FactorBlocks accel_factor(const SegmentInterp &si,
                          const Eigen::Matrix3d &body_from_accel,
                          int accel_idx, const Eigen::Vector3d &meas,
                          const Eigen::Vector3d &gravity);

// Motion-prior residual between adjacent knots: the right knot's segment-local
// coordinates minus their deterministic propagation from the left knot.
// Weighted by the inverse of HybridPrior::process_noise(dt).
FactorBlocks gp_prior_factor(const StateLayout &layout, const KnotState &x1,
                             const KnotState &x2, double dt);

// Gaussian anchor on a single knot: boxminus(x, mean), weighted by the
// inverse of the anchor covariance.
UnaryFactorBlocks anchor_factor(const StateLayout &layout, const KnotState &x,
                                const KnotState &mean);

}  // namespace gplio
