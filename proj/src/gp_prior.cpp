#include "gplio/gp_prior.hpp"

#include <stdexcept>

#include <Eigen/Cholesky>

namespace gplio {

namespace {

// kron(S, I3) for a small scalar-coefficient matrix S.
Eigen::MatrixXd kron_i3(const Eigen::MatrixXd &s) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(3 * s.rows(), 3 * s.cols());
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j)
      out.block<3, 3>(3 * i, 3 * j) =
          s(i, j) * Eigen::Matrix3d::Identity();
  return out;
}

// kron(S, qc): scalar coefficients against a shared 3x3 spectral density.
Eigen::MatrixXd kron_qc(const Eigen::MatrixXd &s, const Eigen::Matrix3d &qc) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(3 * s.rows(), 3 * s.cols());
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j) out.block<3, 3>(3 * i, 3 * j) = s(i, j) * qc;
  return out;
}

void check_qc(const Eigen::Matrix3d &qc) {
  if ((qc - qc.transpose()).norm() > 1e-12)
    throw std::invalid_argument("process_noise: qc must be symmetric");
  Eigen::LLT<Eigen::Matrix3d> llt(qc);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("process_noise: qc must be positive-definite");
}

}  // namespace

int prior_blocks(PriorKind kind) {
  switch (kind) {
    case PriorKind::kRandomWalk: return 1;
    case PriorKind::kConstantVelocity: return 2;
    case PriorKind::kConstantAcceleration: return 3;
  }
  throw std::invalid_argument("prior_blocks: unknown kind");
}

Eigen::MatrixXd transition_scalar(PriorKind kind, double dt) {
  if (dt < 0.0) throw std::invalid_argument("transition: dt must be >= 0");
  const int b = prior_blocks(kind);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(b, b);
  // Upper-triangular Taylor blocks: phi(i,j) = dt^(j-i) / (j-i)!
  for (int i = 0; i < b; ++i) {
    double c = 1.0;
    for (int j = i + 1; j < b; ++j) {
      c *= dt / static_cast<double>(j - i);
      phi(i, j) = c;
    }
  }
  return phi;
}

Eigen::MatrixXd transition(PriorKind kind, double dt) {
  return kron_i3(transition_scalar(kind, dt));
}

Eigen::MatrixXd process_noise(PriorKind kind, double dt,
                              const Eigen::Matrix3d &qc) {
  if (dt <= 0.0) throw std::invalid_argument("process_noise: dt must be > 0");
  check_qc(qc);
  const double dt2 = dt * dt, dt3 = dt2 * dt, dt4 = dt3 * dt, dt5 = dt4 * dt;
  Eigen::MatrixXd s;
  switch (kind) {
    case PriorKind::kRandomWalk:
      s = Eigen::MatrixXd::Constant(1, 1, dt);
      break;
    case PriorKind::kConstantVelocity:
      s.resize(2, 2);
      // clang-format off
      s << dt3 / 3.0, dt2 / 2.0,
           dt2 / 2.0, dt;
      // clang-format on
      break;
    case PriorKind::kConstantAcceleration:
      s.resize(3, 3);
      // clang-format off
      s << dt5 / 20.0, dt4 / 8.0, dt3 / 6.0,
           dt4 /  8.0, dt3 / 3.0, dt2 / 2.0,
           dt3 /  6.0, dt2 / 2.0, dt;
      // clang-format on
      break;
  }
  return kron_qc(s, qc);
}

void HybridPrior::validate() const {
  if (rotation == PriorKind::kConstantAcceleration)
    throw std::invalid_argument(
        "HybridPrior: constant-acceleration rotation is not supported");
  if (num_gyro_bias < 0 || num_accel_bias < 0)
    throw std::invalid_argument("HybridPrior: negative bias count");
}

Eigen::MatrixXd HybridPrior::transition(double dt) const {
  validate();
  const int n = dim();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  int off = 0;
  phi.block(off, off, rotation_dim(), rotation_dim()) =
      gplio::transition(rotation, dt);
  off += rotation_dim();
  phi.block(off, off, translation_dim(), translation_dim()) =
      gplio::transition(translation, dt);
  // Bias blocks are random walks: identity transition.
  return phi;
}

Eigen::MatrixXd HybridPrior::process_noise(double dt) const {
  validate();
  const int n = dim();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  int off = 0;
  q.block(off, off, rotation_dim(), rotation_dim()) =
      gplio::process_noise(rotation, dt, qc_rotation);
  off += rotation_dim();
  q.block(off, off, translation_dim(), translation_dim()) =
      gplio::process_noise(translation, dt, qc_translation);
  off += translation_dim();
  for (int i = 0; i < num_gyro_bias; ++i, off += 3)
    q.block<3, 3>(off, off) =
        gplio::process_noise(PriorKind::kRandomWalk, dt, qc_gyro_bias);
  for (int i = 0; i < num_accel_bias; ++i, off += 3)
    q.block<3, 3>(off, off) =
        gplio::process_noise(PriorKind::kRandomWalk, dt, qc_accel_bias);
  return q;
}

Eigen::MatrixXd kernel_matrix(const HybridPrior &prior,
                              const std::vector<double> &times,
                              const Eigen::MatrixXd &k0) {
  const int d = prior.dim();
  const int n = static_cast<int>(times.size());
  if (n < 1) throw std::invalid_argument("kernel_matrix: need at least 1 time");
  if (k0.rows() != d || k0.cols() != d)
    throw std::invalid_argument("kernel_matrix: k0 has wrong size");
  for (int i = 1; i < n; ++i)
    if (times[i] <= times[i - 1])
      throw std::invalid_argument("kernel_matrix: times must be increasing");

  // Marginal covariances P_i by forward propagation, then
  // K(i,j) = P_i * Phi(t_j - t_i)^T for i <= j.
  std::vector<Eigen::MatrixXd> marginal(n);
  marginal[0] = k0;
  for (int i = 1; i < n; ++i) {
    const double dt = times[i] - times[i - 1];
    const Eigen::MatrixXd phi = prior.transition(dt);
    marginal[i] =
        phi * marginal[i - 1] * phi.transpose() + prior.process_noise(dt);
  }

  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * d, n * d);
  for (int i = 0; i < n; ++i) {
    k.block(i * d, i * d, d, d) = marginal[i];
    for (int j = i + 1; j < n; ++j) {
      const Eigen::MatrixXd phi = prior.transition(times[j] - times[i]);
      k.block(i * d, j * d, d, d) = marginal[i] * phi.transpose();
      k.block(j * d, i * d, d, d) = k.block(i * d, j * d, d, d).transpose();
    }
  }
  return k;
}

}  // namespace gplio
