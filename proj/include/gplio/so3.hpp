#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

// Rotation-group primitives used throughout: exponential/logarithm maps, the
// right Jacobian pair, and directional derivatives of the right Jacobian that
// the measurement/prior Jacobians need.
//
// Conventions:
//  - exp(theta + delta) ~= exp(theta) * exp(right_jacobian(theta) * delta)
//  - angles below kSmallAngle are handled by second-order Taylor expansions
//  - log() returns the minimal-magnitude vector, |log(R)| <= pi

namespace gplio::so3 {

inline constexpr double kSmallAngle = 1e-6;

inline Eigen::Matrix3d hat(const Eigen::Vector3d &v) {
  Eigen::Matrix3d m;
  // clang-format off
  m <<     0.0, -v.z(),  v.y(),
         v.z(),    0.0, -v.x(),
        -v.y(),  v.x(),    0.0;
  // clang-format on
  return m;
}

inline Eigen::Vector3d vee(const Eigen::Matrix3d &m) {
  if ((m + m.transpose()).norm() > 1e-9)
    throw std::invalid_argument("vee: matrix is not skew-symmetric");
  return {m(2, 1), m(0, 2), m(1, 0)};
}

inline Eigen::Matrix3d exp(const Eigen::Vector3d &theta) {
  const double t = theta.norm();
  const Eigen::Matrix3d th = hat(theta);
  if (t < kSmallAngle)
    return Eigen::Matrix3d::Identity() + th + 0.5 * th * th;
  const double s = std::sin(t) / t;
  const double c = (1.0 - std::cos(t)) / (t * t);
  return Eigen::Matrix3d::Identity() + s * th + c * th * th;
}

// Rotation vector of R; throws if R is not orthonormal with det +1.  Near the
// angle pi the usual vee(R - R^T) signal vanishes, so that branch recovers the
// axis as the unit eigenvector of the symmetric part and fixes the sign from
// vee(R - R^T) when it is above noise, else picks the lexicographically
// non-negative axis (so log(diag(1,-1,-1)) = [pi, 0, 0]).
inline Eigen::Vector3d log(const Eigen::Matrix3d &R) {
  if ((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() > 1e-9 ||
      R.determinant() < 0.0)
    throw std::invalid_argument("log: input is not a rotation matrix");

  const double cos_t = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double t = std::acos(cos_t);
  const Eigen::Vector3d r{R(2, 1) - R(1, 2), R(0, 2) - R(2, 0),
                          R(1, 0) - R(0, 1)};  // = 2 sin(t) * axis

  if (t < kSmallAngle) return 0.5 * (1.0 + t * t / 6.0) * r;

  if (t < M_PI - 1e-4) return (0.5 * t / std::sin(t)) * r;

  // Near pi: axis from the eigenvector of (R + R^T)/2 for its unit eigenvalue.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (R + R.transpose()));
  Eigen::Vector3d axis = es.eigenvectors().col(2);  // largest eigenvalue = 1
  const double sign = axis.dot(r);
  if (std::abs(sign) > 1e-9) {
    if (sign < 0.0) axis = -axis;
  } else {
    // Angle is pi (both +axis and -axis are valid): pick the representative
    // whose first nonzero component is positive.
    for (int i = 0; i < 3; ++i) {
      if (std::abs(axis[i]) > 1e-12) {
        if (axis[i] < 0.0) axis = -axis;
        break;
      }
    }
  }
  const double angle = M_PI - std::asin(std::clamp(0.5 * r.norm(), -1.0, 1.0));
  return angle * axis;
}

inline Eigen::Matrix3d right_jacobian(const Eigen::Vector3d &theta) {
  const double t = theta.norm();
  const Eigen::Matrix3d th = hat(theta);
  double c1, c2;
  if (t < kSmallAngle) {
    c1 = 0.5 - t * t / 24.0;
    c2 = 1.0 / 6.0 - t * t / 120.0;
  } else {
    c1 = (1.0 - std::cos(t)) / (t * t);
    c2 = (t - std::sin(t)) / (t * t * t);
  }
  return Eigen::Matrix3d::Identity() - c1 * th + c2 * th * th;
}

inline Eigen::Matrix3d left_jacobian(const Eigen::Vector3d &theta) {
  return right_jacobian(theta).transpose();  // J_l(theta) = J_r(theta)^T
}

// Inverse right Jacobian; restricted to |theta| < pi where it is
// unconditionally well-behaved.
inline Eigen::Matrix3d right_jacobian_inv(const Eigen::Vector3d &theta) {
  const double t = theta.norm();
  if (t >= M_PI)
    throw std::invalid_argument("right_jacobian_inv: |theta| must be < pi");
  const Eigen::Matrix3d th = hat(theta);
  double c;
  if (t < kSmallAngle)
    c = 1.0 / 12.0 + t * t / 720.0;
  else
    c = 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
  return Eigen::Matrix3d::Identity() + 0.5 * th + c * th * th;
}

inline Eigen::Matrix3d left_jacobian_inv(const Eigen::Vector3d &theta) {
  return right_jacobian_inv(theta).transpose();
}

// d(right_jacobian(theta) * v) / d(theta), for fixed v.
//
// With J_r = I - c1 hat(theta) + c2 hat(theta)^2, c1 = (1-cos t)/t^2,
// c2 = (t - sin t)/t^3, the product rule gives
//   -(c1'/t) (theta x v) theta^T + c1 hat(v)
//   +(c2'/t) (theta x (theta x v)) theta^T
//   - c2 (hat(theta x v) + hat(theta) hat(v)).
inline Eigen::Matrix3d d_right_jacobian_v(const Eigen::Vector3d &theta,
                                          const Eigen::Vector3d &v) {
  const double t = theta.norm();
  double c1, c2, dc1_t, dc2_t;  // dc*_t = (d c*/d t) / t
  if (t < 1e-4) {
    const double t2 = t * t;
    c1 = 0.5 - t2 / 24.0;
    c2 = 1.0 / 6.0 - t2 / 120.0;
    dc1_t = -1.0 / 12.0 + t2 / 180.0;
    dc2_t = -1.0 / 60.0 + t2 / 1260.0;
  } else {
    const double t2 = t * t, t3 = t2 * t;
    const double st = std::sin(t), ct = std::cos(t);
    c1 = (1.0 - ct) / t2;
    c2 = (t - st) / t3;
    dc1_t = (t * st - 2.0 * (1.0 - ct)) / (t2 * t2);
    dc2_t = (t * (1.0 - ct) - 3.0 * (t - st)) / (t2 * t3);
  }
  const Eigen::Vector3d tv = theta.cross(v);
  const Eigen::Vector3d ttv = theta.cross(tv);
  return -dc1_t * tv * theta.transpose() + c1 * hat(v) +
         dc2_t * ttv * theta.transpose() -
         c2 * (hat(tv) + hat(theta) * hat(v));
}

// d(right_jacobian_inv(theta) * v) / d(theta), for fixed v.  Follows from
// differentiating J_r^{-1} J_r = I:  dX(J_r^{-1} v) = -J_r^{-1} dX(J_r u)
// with u = J_r^{-1} v.
inline Eigen::Matrix3d d_right_jacobian_inv_v(const Eigen::Vector3d &theta,
                                              const Eigen::Vector3d &v) {
  const Eigen::Matrix3d jr_inv = right_jacobian_inv(theta);
  return -jr_inv * d_right_jacobian_v(theta, jr_inv * v);
}

}  // namespace gplio::so3
