#include "gplio/gp_interp.hpp"

#include <stdexcept>

#include "gplio/so3.hpp"

namespace gplio {

namespace {

void check_args(double dt, double tau_offset) {
  if (dt <= 0.0) throw std::invalid_argument("interp_coeffs: dt must be > 0");
  if (tau_offset < 0.0 || tau_offset > dt)
    throw std::invalid_argument("interp_coeffs: tau_offset outside [0, dt]");
}

Eigen::MatrixXd kron_i3(const Eigen::MatrixXd &s) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(3 * s.rows(), 3 * s.cols());
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j)
      out.block<3, 3>(3 * i, 3 * j) = s(i, j) * Eigen::Matrix3d::Identity();
  return out;
}

}  // namespace

Eigen::MatrixXd interp_psi_scalar(PriorKind kind, double dt,
                                  double tau_offset) {
  check_args(dt, tau_offset);
  const double a = tau_offset / dt;   // alpha
  const double a2 = a * a, a3 = a2 * a;
  Eigen::MatrixXd psi;
  switch (kind) {
    case PriorKind::kRandomWalk:
      psi = Eigen::MatrixXd::Constant(1, 1, a);
      break;
    case PriorKind::kConstantVelocity:
      psi.resize(2, 2);
      // clang-format off
      psi << a2 * (3.0 - 2.0 * a),      a2 * (a - 1.0) * dt,
             6.0 * a * (1.0 - a) / dt,  a * (3.0 * a - 2.0);
      // clang-format on
      break;
    case PriorKind::kConstantAcceleration:
      psi.resize(3, 3);
      // clang-format off
      psi << a3 * (10.0 - 15.0 * a + 6.0 * a2),
             a3 * (-4.0 + 7.0 * a - 3.0 * a2) * dt,
             a3 * (1.0 - 2.0 * a + a2) * dt * dt / 2.0,
             30.0 * a2 * (1.0 - a) * (1.0 - a) / dt,
             a2 * (-12.0 + 28.0 * a - 15.0 * a2),
             a2 * (3.0 - 8.0 * a + 5.0 * a2) * dt / 2.0,
             60.0 * a * (1.0 - 3.0 * a + 2.0 * a2) / (dt * dt),
             -12.0 * a * (2.0 - 7.0 * a + 5.0 * a2) / dt,
             a * (3.0 - 12.0 * a + 10.0 * a2);
      // clang-format on
      break;
  }
  return psi;
}

Eigen::MatrixXd interp_lambda_scalar(PriorKind kind, double dt,
                                     double tau_offset) {
  // Lambda(tau) = Phi(tau_offset) - Psi(tau) Phi(dt): the deterministic
  // propagation from the left knot minus what Psi already accounts for.
  return transition_scalar(kind, tau_offset) -
         interp_psi_scalar(kind, dt, tau_offset) * transition_scalar(kind, dt);
}

InterpCoeffs interp_coeffs(PriorKind kind, double dt, double tau_offset) {
  InterpCoeffs c;
  c.lambda = kron_i3(interp_lambda_scalar(kind, dt, tau_offset));
  c.psi = kron_i3(interp_psi_scalar(kind, dt, tau_offset));
  c.alpha = tau_offset / dt;
  return c;
}

Eigen::VectorXd interp_vector(const InterpCoeffs &c, const Eigen::VectorXd &x1,
                              const Eigen::VectorXd &x2) {
  if (x1.size() != c.lambda.cols() || x2.size() != c.psi.cols())
    throw std::invalid_argument("interp_vector: state size mismatch");
  return c.lambda * x1 + c.psi * x2;
}

void interp_rotation(PriorKind kind, double dt, double tau_offset,
                     const Eigen::Matrix3d &r1, const Eigen::Vector3d &w1,
                     const Eigen::Matrix3d &r2, const Eigen::Vector3d &w2,
                     Eigen::Matrix3d *r_tau, Eigen::Vector3d *w_tau) {
  check_args(dt, tau_offset);
  const Eigen::Vector3d theta = so3::log(r1.transpose() * r2);

  if (kind == PriorKind::kRandomWalk) {
    const double a = tau_offset / dt;
    if (r_tau) *r_tau = r1 * so3::exp(a * theta);
    if (w_tau) w_tau->setZero();
    return;
  }
  if (kind != PriorKind::kConstantVelocity)
    throw std::invalid_argument(
        "interp_rotation: rotation prior must be random-walk or "
        "constant-velocity");

  // Segment-local coordinates: gamma(t) = [theta(t); dtheta(t)] with
  // theta(t) = log(R1^T R(t)).  At the left knot theta = 0 and dtheta = w1;
  // at the right knot theta is the segment step and dtheta = J_r^{-1} w2
  // (body rate mapped to local-coordinate rate).
  const Eigen::Vector3d s2 = so3::right_jacobian_inv(theta) * w2;
  const Eigen::MatrixXd lam =
      interp_lambda_scalar(PriorKind::kConstantVelocity, dt, tau_offset);
  const Eigen::MatrixXd psi =
      interp_psi_scalar(PriorKind::kConstantVelocity, dt, tau_offset);

  const Eigen::Vector3d theta_tau =
      lam(0, 1) * w1 + psi(0, 0) * theta + psi(0, 1) * s2;
  const Eigen::Vector3d s_tau =
      lam(1, 1) * w1 + psi(1, 0) * theta + psi(1, 1) * s2;

  if (r_tau) *r_tau = r1 * so3::exp(theta_tau);
  if (w_tau) *w_tau = so3::right_jacobian(theta_tau) * s_tau;
}

}  // namespace gplio
