#include "gplio/factors.hpp"

#include <stdexcept>

#include "gplio/gp_interp.hpp"
#include "gplio/so3.hpp"
#include "gplio/trajectory.hpp"

namespace gplio {

namespace {

// Fills the translation-weight row for the value with scalar coefficient row
// `row` of the interpolation weights, given the translation prior kind.
void fill_translation_weights(PriorKind kind, double dt, double tau, int row,
                              double w[6]) {
  const int b = prior_blocks(kind);
  if (row >= b) return;  // value not represented by this prior
  const Eigen::MatrixXd lam = interp_lambda_scalar(kind, dt, tau);
  const Eigen::MatrixXd psi = interp_psi_scalar(kind, dt, tau);
  for (int j = 0; j < b; ++j) {
    w[j] = lam(row, j);
    w[3 + j] = psi(row, j);
  }
}

}  // namespace

/* -------------------------------------------------------------------------- */

SegmentInterp::SegmentInterp(const StateLayout &layout_in, const KnotState &x1_in,
                             const KnotState &x2_in, double tau_offset)
    : layout(layout_in), x1(x1_in), x2(x2_in) {
  dt = to_sec(x2.t_ns - x1.t_ns);
  tau = tau_offset;
  if (dt <= 0.0) throw std::invalid_argument("SegmentInterp: bad knot order");
  if (tau < 0.0 || tau > dt)
    throw std::invalid_argument("SegmentInterp: tau outside segment");
  alpha = tau / dt;

  theta = so3::log(x1.R.transpose() * x2.R);
  const Eigen::Matrix3d jr_inv = so3::right_jacobian_inv(theta);
  const Eigen::Matrix3d dth_dth1 = -jr_inv.transpose();  // -J_l^{-1}(theta)
  const Eigen::Matrix3d dth_dth2 = jr_inv;

  if (layout.rotation_kind == PriorKind::kRandomWalk) {
    theta_tau = alpha * theta;
    s_tau.setZero();
    dth_d1 = alpha * dth_dth1;
    dth_d2 = alpha * dth_dth2;
    dth_dw1.setZero();
    dth_dw2.setZero();
    ds_d1.setZero();
    ds_dw1.setZero();
    ds_d2.setZero();
    ds_dw2.setZero();
  } else {
    // Constant-velocity rotation chart: gamma = [theta; dtheta], with
    // gamma(0) = [0; w1] and gamma(dt) = [theta; J_r^{-1}(theta) w2].
    const Eigen::Vector3d s2 = jr_inv * x2.omega;
    const Eigen::MatrixXd lam =
        interp_lambda_scalar(PriorKind::kConstantVelocity, dt, tau);
    const Eigen::MatrixXd psi =
        interp_psi_scalar(PriorKind::kConstantVelocity, dt, tau);
    theta_tau = lam(0, 1) * x1.omega + psi(0, 0) * theta + psi(0, 1) * s2;
    s_tau = lam(1, 1) * x1.omega + psi(1, 0) * theta + psi(1, 1) * s2;

    // d s2 / d theta for fixed w2, then the product rule through the weights.
    const Eigen::Matrix3d ds2_dth = so3::d_right_jacobian_inv_v(theta, x2.omega);
    const Eigen::Matrix3d t1 = psi(0, 0) * Eigen::Matrix3d::Identity() +
                               psi(0, 1) * ds2_dth;  // d theta_tau / d theta
    const Eigen::Matrix3d t2 = psi(1, 0) * Eigen::Matrix3d::Identity() +
                               psi(1, 1) * ds2_dth;  // d s_tau / d theta
    dth_d1 = t1 * dth_dth1;
    dth_d2 = t1 * dth_dth2;
    dth_dw1 = lam(0, 1) * Eigen::Matrix3d::Identity();
    dth_dw2 = psi(0, 1) * jr_inv;
    ds_d1 = t2 * dth_dth1;
    ds_d2 = t2 * dth_dth2;
    ds_dw1 = lam(1, 1) * Eigen::Matrix3d::Identity();
    ds_dw2 = psi(1, 1) * jr_inv;
  }

  exp_theta_tau = so3::exp(theta_tau);
  jr_theta_tau = so3::right_jacobian(theta_tau);
  R_tau = x1.R * exp_theta_tau;
  if (layout.rotation_kind == PriorKind::kConstantVelocity)
    w_tau = jr_theta_tau * s_tau;

  fill_translation_weights(layout.translation_kind, dt, tau, 0, wp);
  fill_translation_weights(layout.translation_kind, dt, tau, 2, wa);
  const double pw[6] = {wp[0], wp[1], wp[2], wp[3], wp[4], wp[5]};
  p_tau = pw[0] * x1.p + pw[3] * x2.p;
  if (layout.has_vel()) p_tau += pw[1] * x1.v + pw[4] * x2.v;
  if (layout.has_acc()) {
    p_tau += pw[2] * x1.a + pw[5] * x2.a;
    a_tau = wa[0] * x1.p + wa[1] * x1.v + wa[2] * x1.a + wa[3] * x2.p +
            wa[4] * x2.v + wa[5] * x2.a;
  }
}

/* -------------------------------------------------------------------------- */

namespace {

// Scatters a 3 x 3 block into the rotation-related columns of J1/J2 given the
// four chain blocks d(target)/d{th1, w1, th2, w2} premultiplied by `lhs`.
void add_rotation_chain(const SegmentInterp &si, const Eigen::Matrix3d &lhs,
                        const Eigen::Matrix3d &dth1, const Eigen::Matrix3d &dw1,
                        const Eigen::Matrix3d &dth2, const Eigen::Matrix3d &dw2,
                        Eigen::MatrixXd *j1, Eigen::MatrixXd *j2) {
  const StateLayout &l = si.layout;
  j1->block<3, 3>(0, l.rot) += lhs * dth1;
  j2->block<3, 3>(0, l.rot) += lhs * dth2;
  if (l.has_omega()) {
    j1->block<3, 3>(0, l.omega) += lhs * dw1;
    j2->block<3, 3>(0, l.omega) += lhs * dw2;
  }
}

}  // namespace

FactorBlocks lidar_plane_factor(const SegmentInterp &si,
                                const Eigen::Isometry3d &body_from_lidar,
                                const Eigen::Vector3d &pt_lidar,
                                const PlaneFit &plane) {
  const StateLayout &l = si.layout;
  FactorBlocks f;
  const Eigen::Vector3d xb = body_from_lidar * pt_lidar;
  const Eigen::Vector3d w = si.R_tau * xb + si.p_tau;
  f.r = Eigen::VectorXd::Constant(1, plane.normal.dot(w - plane.point));
  f.J1 = Eigen::MatrixXd::Zero(1, l.dim);
  f.J2 = Eigen::MatrixXd::Zero(1, l.dim);

  // d w / d theta_tau and the direct left-knot term from R1's own
  // perturbation (R_tau = R1 exp(d1) exp(theta_tau(d1))).
  Eigen::MatrixXd dw1 = Eigen::MatrixXd::Zero(3, l.dim);
  Eigen::MatrixXd dw2 = Eigen::MatrixXd::Zero(3, l.dim);
  const Eigen::Matrix3d dw_dthtau =
      -si.x1.R * si.exp_theta_tau * so3::hat(xb) * si.jr_theta_tau;
  add_rotation_chain(si, dw_dthtau, si.dth_d1, si.dth_dw1, si.dth_d2,
                     si.dth_dw2, &dw1, &dw2);
  dw1.block<3, 3>(0, l.rot) -= si.x1.R * so3::hat(si.exp_theta_tau * xb);

  const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
  dw1.block<3, 3>(0, l.pos) += si.wp[0] * id;
  dw2.block<3, 3>(0, l.pos) += si.wp[3] * id;
  if (l.has_vel()) {
    dw1.block<3, 3>(0, l.vel) += si.wp[1] * id;
    dw2.block<3, 3>(0, l.vel) += si.wp[4] * id;
  }
  if (l.has_acc()) {
    dw1.block<3, 3>(0, l.acc) += si.wp[2] * id;
    dw2.block<3, 3>(0, l.acc) += si.wp[5] * id;
  }
  f.J1 = plane.normal.transpose() * dw1;
  f.J2 = plane.normal.transpose() * dw2;
  return f;
}

FactorBlocks gyro_factor(const SegmentInterp &si,
                         const Eigen::Matrix3d &body_from_gyro, int gyro_idx,
                         const Eigen::Vector3d &meas) {
  const StateLayout &l = si.layout;
  if (!l.has_omega() || gyro_idx >= l.num_gyros)
    throw std::invalid_argument("gyro_factor: state has no rate/bias block");
  FactorBlocks f;
  f.r = si.w_tau + si.gyro_bias(gyro_idx) - body_from_gyro * meas;
  f.J1 = Eigen::MatrixXd::Zero(3, l.dim);
  f.J2 = Eigen::MatrixXd::Zero(3, l.dim);

  // w_tau = J_r(theta_tau) s_tau: product rule through both arguments.
  const Eigen::Matrix3d dw_dth = so3::d_right_jacobian_v(si.theta_tau, si.s_tau);
  f.J1.block<3, 3>(0, l.rot) =
      si.jr_theta_tau * si.ds_d1 + dw_dth * si.dth_d1;
  f.J2.block<3, 3>(0, l.rot) =
      si.jr_theta_tau * si.ds_d2 + dw_dth * si.dth_d2;
  f.J1.block<3, 3>(0, l.omega) =
      si.jr_theta_tau * si.ds_dw1 + dw_dth * si.dth_dw1;
  f.J2.block<3, 3>(0, l.omega) =
      si.jr_theta_tau * si.ds_dw2 + dw_dth * si.dth_dw2;

  const int bi = l.gyro_bias(gyro_idx);
  f.J1.block<3, 3>(0, bi) =
      (1.0 - si.alpha) * Eigen::Matrix3d::Identity();
  f.J2.block<3, 3>(0, bi) = si.alpha * Eigen::Matrix3d::Identity();
  return f;
}

FactorBlocks accel_factor(const SegmentInterp &si,
                          const Eigen::Matrix3d &body_from_accel,
                          int accel_idx, const Eigen::Vector3d &meas,
                          const Eigen::Vector3d &gravity) {
  const StateLayout &l = si.layout;
  if (!l.has_acc() || accel_idx >= l.num_accels)
    throw std::invalid_argument(
        "accel_factor: state has no acceleration/bias block");
  FactorBlocks f;
  const Eigen::Vector3d u = si.a_tau + gravity;          // world frame
  const Eigen::Vector3d u1 = si.x1.R.transpose() * u;    // left-knot frame
  const Eigen::Matrix3d exp_neg = si.exp_theta_tau.transpose();
  f.r = exp_neg * u1 + si.accel_bias(accel_idx) - body_from_accel * meas;
  f.J1 = Eigen::MatrixXd::Zero(3, l.dim);
  f.J2 = Eigen::MatrixXd::Zero(3, l.dim);

  // d(R_tau^T u)/d theta_tau for fixed u, plus the direct R1 term.
  const Eigen::Matrix3d df_dthtau =
      exp_neg * so3::hat(u1) * si.jr_theta_tau.transpose();  // J_l = J_r^T
  add_rotation_chain(si, df_dthtau, si.dth_d1, si.dth_dw1, si.dth_d2,
                     si.dth_dw2, &f.J1, &f.J2);
  f.J1.block<3, 3>(0, l.rot) += exp_neg * so3::hat(u1);

  // Through a_tau (u depends on the acceleration blocks).
  const Eigen::Matrix3d rt = si.R_tau.transpose();
  f.J1.block<3, 3>(0, l.pos) += si.wa[0] * rt;
  f.J2.block<3, 3>(0, l.pos) += si.wa[3] * rt;
  f.J1.block<3, 3>(0, l.vel) += si.wa[1] * rt;
  f.J2.block<3, 3>(0, l.vel) += si.wa[4] * rt;
  f.J1.block<3, 3>(0, l.acc) += si.wa[2] * rt;
  f.J2.block<3, 3>(0, l.acc) += si.wa[5] * rt;

  const int bi = l.accel_bias(accel_idx);
  f.J1.block<3, 3>(0, bi) = (1.0 - si.alpha) * Eigen::Matrix3d::Identity();
  f.J2.block<3, 3>(0, bi) = si.alpha * Eigen::Matrix3d::Identity();
  return f;
}

/* -------------------------------------------------------------------------- */

FactorBlocks gp_prior_factor(const StateLayout &layout, const KnotState &x1,
                             const KnotState &x2, double dt) {
  FactorBlocks f;
  f.r = Eigen::VectorXd::Zero(layout.dim);
  f.J1 = Eigen::MatrixXd::Zero(layout.dim, layout.dim);
  f.J2 = Eigen::MatrixXd::Zero(layout.dim, layout.dim);
  const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();

  // Rotation block: residual in the left knot's local chart.
  const Eigen::Vector3d theta = so3::log(x1.R.transpose() * x2.R);
  const Eigen::Matrix3d jr_inv = so3::right_jacobian_inv(theta);
  const Eigen::Matrix3d dth_dth1 = -jr_inv.transpose();
  f.r.segment<3>(layout.rot) = theta;
  f.J1.block<3, 3>(layout.rot, layout.rot) = dth_dth1;
  f.J2.block<3, 3>(layout.rot, layout.rot) = jr_inv;
  if (layout.rotation_kind == PriorKind::kConstantVelocity) {
    f.r.segment<3>(layout.rot) -= dt * x1.omega;
    f.J1.block<3, 3>(layout.rot, layout.omega) = -dt * id;
    const Eigen::Vector3d s2 = jr_inv * x2.omega;
    f.r.segment<3>(layout.omega) = s2 - x1.omega;
    const Eigen::Matrix3d ds2_dth = so3::d_right_jacobian_inv_v(theta, x2.omega);
    f.J1.block<3, 3>(layout.omega, layout.rot) = ds2_dth * dth_dth1;
    f.J1.block<3, 3>(layout.omega, layout.omega) = -id;
    f.J2.block<3, 3>(layout.omega, layout.rot) = ds2_dth * jr_inv;
    f.J2.block<3, 3>(layout.omega, layout.omega) = jr_inv;
  }

  // Translation block: linear in the states.
  switch (layout.translation_kind) {
    case PriorKind::kRandomWalk:
      f.r.segment<3>(layout.pos) = x2.p - x1.p;
      f.J1.block<3, 3>(layout.pos, layout.pos) = -id;
      f.J2.block<3, 3>(layout.pos, layout.pos) = id;
      break;
    case PriorKind::kConstantVelocity:
      f.r.segment<3>(layout.pos) = x2.p - x1.p - dt * x1.v;
      f.r.segment<3>(layout.vel) = x2.v - x1.v;
      f.J1.block<3, 3>(layout.pos, layout.pos) = -id;
      f.J1.block<3, 3>(layout.pos, layout.vel) = -dt * id;
      f.J1.block<3, 3>(layout.vel, layout.vel) = -id;
      f.J2.block<3, 3>(layout.pos, layout.pos) = id;
      f.J2.block<3, 3>(layout.vel, layout.vel) = id;
      break;
    case PriorKind::kConstantAcceleration:
      f.r.segment<3>(layout.pos) =
          x2.p - x1.p - dt * x1.v - 0.5 * dt * dt * x1.a;
      f.r.segment<3>(layout.vel) = x2.v - x1.v - dt * x1.a;
      f.r.segment<3>(layout.acc) = x2.a - x1.a;
      f.J1.block<3, 3>(layout.pos, layout.pos) = -id;
      f.J1.block<3, 3>(layout.pos, layout.vel) = -dt * id;
      f.J1.block<3, 3>(layout.pos, layout.acc) = -0.5 * dt * dt * id;
      f.J1.block<3, 3>(layout.vel, layout.vel) = -id;
      f.J1.block<3, 3>(layout.vel, layout.acc) = -dt * id;
      f.J1.block<3, 3>(layout.acc, layout.acc) = -id;
      f.J2.block<3, 3>(layout.pos, layout.pos) = id;
      f.J2.block<3, 3>(layout.vel, layout.vel) = id;
      f.J2.block<3, 3>(layout.acc, layout.acc) = id;
      break;
  }

  for (int i = 0; i < layout.num_gyros; ++i) {
    const int off = layout.gyro_bias(i);
    f.r.segment<3>(off) = x2.bg[i] - x1.bg[i];
    f.J1.block<3, 3>(off, off) = -id;
    f.J2.block<3, 3>(off, off) = id;
  }
  for (int i = 0; i < layout.num_accels; ++i) {
    const int off = layout.accel_bias(i);
    f.r.segment<3>(off) = x2.ba[i] - x1.ba[i];
    f.J1.block<3, 3>(off, off) = -id;
    f.J2.block<3, 3>(off, off) = id;
  }
  return f;
}

UnaryFactorBlocks anchor_factor(const StateLayout &layout, const KnotState &x,
                                const KnotState &mean) {
  UnaryFactorBlocks f;
  f.r = boxminus(x, mean, layout);
  f.J = Eigen::MatrixXd::Identity(layout.dim, layout.dim);
  // d log(mean.R^T x.R exp(d)) / d d at d=0.
  f.J.block<3, 3>(layout.rot, layout.rot) =
      so3::right_jacobian_inv(f.r.segment<3>(layout.rot));
  return f;
}

}  // namespace gplio
