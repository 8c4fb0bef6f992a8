#include <doctest.h>

#include <random>

#include "gplio/gp_interp.hpp"
#include "gplio/so3.hpp"
#include "oracles.hpp"

using namespace gplio;

namespace {
std::mt19937_64 rng(11);
Eigen::Vector3d random_vec(double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return {g(rng), g(rng), g(rng)};
}

const PriorKind kKinds[] = {PriorKind::kRandomWalk, PriorKind::kConstantVelocity,
                            PriorKind::kConstantAcceleration};
}  // namespace

TEST_CASE("interpolation weights match the general construction") {
  // All six (kind x {Lambda, Psi}) coefficient families against
  // Psi = Q(tau) Phi(dt-tau)^T Q(dt)^{-1}, Lambda = Phi(tau) - Psi Phi(dt),
  // built on quadrature Q and Taylor Phi: 100 random (dt, alpha) per kind.
  std::uniform_real_distribution<double> udt(0.02, 2.0);
  std::uniform_real_distribution<double> ua(0.01, 0.99);
  for (PriorKind kind : kKinds) {
    for (int i = 0; i < 100; ++i) {
      const double dt = udt(rng);
      const double tau = ua(rng) * dt;
      // The closed forms must be independent of the spectral density; check
      // against the general construction with a random SPD one.
      Eigen::Matrix3d qc;
      {
        std::normal_distribution<double> g(0.0, 1.0);
        Eigen::Matrix3d a;
        for (int k = 0; k < 9; ++k) a(k / 3, k % 3) = g(rng);
        qc = a * a.transpose() + 0.2 * Eigen::Matrix3d::Identity();
      }
      Eigen::MatrixXd lam_ref, psi_ref;
      oracle::interp_general(kind, dt, tau, qc, &lam_ref, &psi_ref);
      const InterpCoeffs c = interp_coeffs(kind, dt, tau);
      CHECK(oracle::rel_err(c.lambda, lam_ref) < 1e-9);
      CHECK(oracle::rel_err(c.psi, psi_ref) < 1e-9);
    }
  }
}

TEST_CASE("random walk reduces to linear interpolation") {
  std::uniform_real_distribution<double> udt(0.05, 1.5), ua(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double dt = udt(rng), tau = ua(rng) * dt, a = tau / dt;
    const InterpCoeffs c = interp_coeffs(PriorKind::kRandomWalk, dt, tau);
    const Eigen::Vector3d x1 = random_vec(), x2 = random_vec();
    const Eigen::VectorXd x = interp_vector(c, x1, x2);
    CHECK((x - ((1.0 - a) * x1 + a * x2)).norm() < 1e-12);
  }
}

TEST_CASE("constant velocity reduces to cubic Hermite") {
  std::uniform_real_distribution<double> udt(0.05, 1.5), ua(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double dt = udt(rng), tau = ua(rng) * dt;
    const InterpCoeffs c = interp_coeffs(PriorKind::kConstantVelocity, dt, tau);
    const Eigen::Vector3d p1 = random_vec(), v1 = random_vec();
    const Eigen::Vector3d p2 = random_vec(), v2 = random_vec();
    Eigen::VectorXd x1(6), x2(6);
    x1 << p1, v1;
    x2 << p2, v2;
    const Eigen::VectorXd x = interp_vector(c, x1, x2);
    Eigen::Vector3d p_ref, v_ref;
    oracle::hermite(dt, tau, p1, v1, p2, v2, &p_ref, &v_ref);
    CHECK((x.head<3>() - p_ref).norm() < 1e-11);
    CHECK((x.tail<3>() - v_ref).norm() < 1e-10);
  }
}

TEST_CASE("weights reproduce the knots at the segment ends") {
  for (PriorKind kind : kKinds) {
    const int n = 3 * prior_blocks(kind);
    const double dt = 0.4;
    const InterpCoeffs c0 = interp_coeffs(kind, dt, 0.0);
    CHECK((c0.lambda - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-12);
    CHECK(c0.psi.norm() < 1e-12);
    const InterpCoeffs c1 = interp_coeffs(kind, dt, dt);
    CHECK(c1.lambda.norm() < 1e-10);
    CHECK((c1.psi - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-10);
  }
  CHECK_THROWS_AS(interp_coeffs(PriorKind::kRandomWalk, 0.4, -0.01),
                  std::invalid_argument);
  CHECK_THROWS_AS(interp_coeffs(PriorKind::kRandomWalk, 0.4, 0.41),
                  std::invalid_argument);
  CHECK_THROWS_AS(interp_coeffs(PriorKind::kRandomWalk, 0.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("rotation interpolation hits both knots and stays smooth") {
  std::uniform_real_distribution<double> ua(0.0, 1.0);
  const double dt = 0.25;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d r1 = so3::exp(random_vec(0.8));
    const Eigen::Vector3d w1 = random_vec(2.0);
    const Eigen::Matrix3d r2 = r1 * so3::exp(random_vec(0.5));
    const Eigen::Vector3d w2 = random_vec(2.0);

    Eigen::Matrix3d r_a, r_b;
    Eigen::Vector3d w_a, w_b;
    interp_rotation(PriorKind::kConstantVelocity, dt, 0.0, r1, w1, r2, w2, &r_a,
                    &w_a);
    CHECK((r_a - r1).norm() < 1e-12);
    CHECK((w_a - w1).norm() < 1e-12);
    interp_rotation(PriorKind::kConstantVelocity, dt, dt, r1, w1, r2, w2, &r_b,
                    &w_b);
    CHECK((r_b - r2).norm() < 1e-10);
    CHECK((w_b - w2).norm() < 1e-9);

    // Body rate equals the numerical derivative of the interpolated rotation.
    const double tau = ua(rng) * dt * 0.9 + 0.05 * dt;
    const double h = 1e-6;
    Eigen::Matrix3d rm, rp, rc;
    Eigen::Vector3d wc;
    interp_rotation(PriorKind::kConstantVelocity, dt, tau - h, r1, w1, r2, w2,
                    &rm, nullptr);
    interp_rotation(PriorKind::kConstantVelocity, dt, tau + h, r1, w1, r2, w2,
                    &rp, nullptr);
    interp_rotation(PriorKind::kConstantVelocity, dt, tau, r1, w1, r2, w2, &rc,
                    &wc);
    const Eigen::Vector3d w_fd = so3::log(rm.transpose() * rp) / (2.0 * h);
    CHECK((wc - w_fd).norm() < 1e-5 * std::max(1.0, wc.norm()));
  }
}

TEST_CASE("rotation interpolation is invariant to a global left rotation") {
  const double dt = 0.25, tau = 0.11;
  const Eigen::Matrix3d r1 = so3::exp(random_vec(0.6));
  const Eigen::Vector3d w1 = random_vec(1.0);
  const Eigen::Matrix3d r2 = r1 * so3::exp(random_vec(0.4));
  const Eigen::Vector3d w2 = random_vec(1.0);
  const Eigen::Matrix3d g = so3::exp(random_vec(1.0));

  Eigen::Matrix3d r_a, r_b;
  Eigen::Vector3d w_a, w_b;
  interp_rotation(PriorKind::kConstantVelocity, dt, tau, r1, w1, r2, w2, &r_a,
                  &w_a);
  interp_rotation(PriorKind::kConstantVelocity, dt, tau, g * r1, w1, g * r2, w2,
                  &r_b, &w_b);
  CHECK((g * r_a - r_b).norm() < 1e-12);
  CHECK((w_a - w_b).norm() < 1e-12);
}

TEST_CASE("random-walk rotation interpolates along the geodesic") {
  const double dt = 0.3;
  const Eigen::Matrix3d r1 = so3::exp(random_vec(0.7));
  const Eigen::Vector3d dtheta = random_vec(0.5);
  const Eigen::Matrix3d r2 = r1 * so3::exp(dtheta);
  for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    Eigen::Matrix3d r;
    Eigen::Vector3d w;
    interp_rotation(PriorKind::kRandomWalk, dt, a * dt, r1,
                    Eigen::Vector3d::Zero(), r2, Eigen::Vector3d::Zero(), &r,
                    &w);
    CHECK((r - r1 * so3::exp(a * dtheta)).norm() < 1e-11);
    CHECK(w.norm() == doctest::Approx(0.0));
  }
  Eigen::Matrix3d r;
  CHECK_THROWS_AS(
      interp_rotation(PriorKind::kConstantAcceleration, dt, 0.1, r1,
                      Eigen::Vector3d::Zero(), r2, Eigen::Vector3d::Zero(), &r,
                      nullptr),
      std::invalid_argument);
}
