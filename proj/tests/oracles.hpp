#pragma once

// Independent numerical references for the test suite: matrix-exponential
// transition via Taylor summation, process noise via composite-Simpson
// quadrature of the white-noise covariance integral, the general
// interpolation-coefficient construction built on those, central finite
// differences, classic interpolation formulas, and brute-force neighbor
// search.  Nothing here reuses the closed forms under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gplio/gp_prior.hpp"

namespace oracle {

// Companion matrix A of the channel SDE dx = A x + L w (white noise enters
// at the highest derivative); A is a strict block shift.
inline Eigen::MatrixXd companion(gplio::PriorKind kind) {
  const int b = gplio::prior_blocks(kind);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * b, 3 * b);
  for (int i = 0; i + 1 < b; ++i)
    a.block<3, 3>(3 * i, 3 * (i + 1)) = Eigen::Matrix3d::Identity();
  return a;
}

// exp(A dt) by plain Taylor summation; exact because A is nilpotent.
inline Eigen::MatrixXd transition_taylor(gplio::PriorKind kind, double dt) {
  const Eigen::MatrixXd a = companion(kind);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd term = sum;
  for (int k = 1; k <= 6; ++k) {
    term = term * a * (dt / k);
    sum += term;
  }
  return sum;
}

// Q(dt) = integral_0^dt exp(A (dt-s)) L Qc L^T exp(A (dt-s))^T ds by
// composite Simpson quadrature (the integrand is a low-order polynomial, so
// a modest panel count is far below the comparison tolerances).
inline Eigen::MatrixXd process_noise_quadrature(gplio::PriorKind kind,
                                                double dt,
                                                const Eigen::Matrix3d &qc,
                                                int panels = 256) {
  const int b = gplio::prior_blocks(kind);
  const int n = 3 * b;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, 3);
  l.block<3, 3>(3 * (b - 1), 0) = Eigen::Matrix3d::Identity();
  auto f = [&](double s) -> Eigen::MatrixXd {
    const Eigen::MatrixXd phi = transition_taylor(kind, dt - s);
    const Eigen::MatrixXd g = phi * l;
    return g * qc * g.transpose();
  };
  const int slices = 2 * panels;
  const double h = dt / slices;
  Eigen::MatrixXd sum = f(0.0) + f(dt);
  for (int i = 1; i < slices; ++i) sum += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * (h / 3.0);
}

// General interpolation coefficients from first principles:
//   Psi = Q(tau) Phi(dt - tau)^T Q(dt)^{-1},  Lambda = Phi(tau) - Psi Phi(dt).
inline void interp_general(gplio::PriorKind kind, double dt, double tau,
                           const Eigen::Matrix3d &qc, Eigen::MatrixXd *lambda,
                           Eigen::MatrixXd *psi) {
  const Eigen::MatrixXd q_tau = process_noise_quadrature(kind, tau, qc);
  const Eigen::MatrixXd q_dt = process_noise_quadrature(kind, dt, qc);
  const Eigen::MatrixXd phi_rest = transition_taylor(kind, dt - tau);
  // Psi^T = Q(dt)^{-1} Phi(dt-tau) Q(tau); Q(dt) is symmetric.
  *psi = q_dt.ldlt().solve(phi_rest * q_tau.transpose()).transpose();
  *lambda = transition_taylor(kind, tau) - (*psi) * transition_taylor(kind, dt);
}

// Central finite-difference Jacobian of f: R^n -> R^m.
inline Eigen::MatrixXd jacobian_fd(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd &)> &f,
    const Eigen::VectorXd &x0, double h = 1e-6) {
  const Eigen::VectorXd f0 = f(x0);
  Eigen::MatrixXd j(f0.size(), x0.size());
  for (int i = 0; i < x0.size(); ++i) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    j.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

// Cubic Hermite interpolation of (p1, v1) -> (p2, v2) over [0, dt].
inline void hermite(double dt, double tau, const Eigen::Vector3d &p1,
                    const Eigen::Vector3d &v1, const Eigen::Vector3d &p2,
                    const Eigen::Vector3d &v2, Eigen::Vector3d *p,
                    Eigen::Vector3d *v) {
  const double a = tau / dt, a2 = a * a, a3 = a2 * a;
  const double h00 = 2 * a3 - 3 * a2 + 1, h10 = a3 - 2 * a2 + a;
  const double h01 = -2 * a3 + 3 * a2, h11 = a3 - a2;
  *p = h00 * p1 + h10 * dt * v1 + h01 * p2 + h11 * dt * v2;
  const double d00 = (6 * a2 - 6 * a) / dt, d10 = 3 * a2 - 4 * a + 1;
  const double d01 = (-6 * a2 + 6 * a) / dt, d11 = 3 * a2 - 2 * a;
  *v = d00 * p1 + d10 * v1 + d01 * p2 + d11 * v2;
}

// Rotation exponential through unit quaternions (independent of the
// Rodrigues-form implementation under test).
inline Eigen::Matrix3d exp_quaternion(const Eigen::Vector3d &theta) {
  const double t = theta.norm();
  Eigen::Quaterniond q;
  if (t < 1e-12) {
    q = Eigen::Quaterniond(1.0, 0.5 * theta.x(), 0.5 * theta.y(),
                           0.5 * theta.z());
  } else {
    const Eigen::Vector3d axis = theta / t;
    q = Eigen::Quaterniond(Eigen::AngleAxisd(t, axis));
  }
  return q.normalized().toRotationMatrix();
}

// k nearest points to q by exhaustive scan; ties by original index.
inline std::vector<Eigen::Vector3d> knn_brute(
    const std::vector<Eigen::Vector3d> &pts, const Eigen::Vector3d &q, int k) {
  std::vector<int> idx(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return (pts[a] - q).squaredNorm() < (pts[b] - q).squaredNorm();
  });
  std::vector<Eigen::Vector3d> out;
  for (int i = 0; i < k && i < static_cast<int>(idx.size()); ++i)
    out.push_back(pts[idx[i]]);
  return out;
}

// Relative max-norm difference used throughout: |a-b| / max(1, |ref|).
inline double rel_err(const Eigen::MatrixXd &test, const Eigen::MatrixXd &ref) {
  const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
  return (test - ref).cwiseAbs().maxCoeff() / scale;
}

}  // namespace oracle
