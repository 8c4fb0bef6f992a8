#pragma once

#include <Eigen/Core>

#include "gplio/gp_prior.hpp"

// O(1) conditional-mean interpolation between two adjacent knots of an LTI
// motion prior:  x(tau) = Lambda(tau) x(t1) + Psi(tau) x(t2).
//
// The coefficients depend only on the prior kind, the knot spacing dt, and the
// normalized position alpha = tau_offset/dt (the spectral density cancels).
// interp_rotation() applies the same weights to the segment-local rotation
// coordinates theta(t) = log(R1^T R(t)) and maps back through exp, so the
// interpolated trajectory is exactly continuous at the knots and invariant to
// a global left rotation.

namespace gplio {

struct InterpCoeffs {
  Eigen::MatrixXd lambda;  // (3b) x (3b), b = prior_blocks(kind)
  Eigen::MatrixXd psi;
  double alpha = 0.0;
};

// Scalar (per-axis) b x b weights; the full coefficients are their Kronecker
// products with I3.  Requires dt > 0 and tau_offset in [0, dt].
Eigen::MatrixXd interp_lambda_scalar(PriorKind kind, double dt,
                                     double tau_offset);
Eigen::MatrixXd interp_psi_scalar(PriorKind kind, double dt, double tau_offset);

InterpCoeffs interp_coeffs(PriorKind kind, double dt, double tau_offset);

// x(tau) for stacked channel states x1, x2 (each 3b long).
Eigen::VectorXd interp_vector(const InterpCoeffs &c, const Eigen::VectorXd &x1,
                              const Eigen::VectorXd &x2);

// Rotation interpolation under a random-walk or constant-velocity prior.
// w1/w2 are body angular rates at the knots; for kRandomWalk they are ignored
// and *w_tau (if non-null) is set to zero.
void interp_rotation(PriorKind kind, double dt, double tau_offset,
                     const Eigen::Matrix3d &r1, const Eigen::Vector3d &w1,
                     const Eigen::Matrix3d &r2, const Eigen::Vector3d &w2,
                     Eigen::Matrix3d *r_tau, Eigen::Vector3d *w_tau);

}  // namespace gplio
