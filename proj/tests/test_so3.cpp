#include <doctest.h>

#include <random>

#include "gplio/so3.hpp"
#include "oracles.hpp"

using namespace gplio;

namespace {
std::mt19937_64 rng(42);
Eigen::Vector3d random_vec(double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return {g(rng), g(rng), g(rng)};
}
}  // namespace

TEST_CASE("hat and vee invert each other") {
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d v = random_vec();
    const Eigen::Matrix3d m = so3::hat(v);
    CHECK((m + m.transpose()).norm() == doctest::Approx(0.0));
    CHECK((so3::vee(m) - v).norm() == doctest::Approx(0.0));
    const Eigen::Vector3d w = random_vec();
    CHECK((m * w - v.cross(w)).norm() < 1e-14);
  }
  Eigen::Matrix3d not_skew = Eigen::Matrix3d::Identity();
  CHECK_THROWS_AS(so3::vee(not_skew), std::invalid_argument);
}

TEST_CASE("exp matches quaternion oracle across magnitudes") {
  std::uniform_real_distribution<double> mag(0.0, M_PI - 1e-3);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d axis = random_vec().normalized();
    const Eigen::Vector3d theta = axis * mag(rng);
    CHECK((so3::exp(theta) - oracle::exp_quaternion(theta)).norm() < 1e-12);
  }
  // Tiny angles go through the series branch.
  for (double t : {1e-7, 1e-9, 1e-12, 0.0}) {
    const Eigen::Vector3d theta = Eigen::Vector3d(1, -2, 0.5).normalized() * t;
    CHECK((so3::exp(theta) - oracle::exp_quaternion(theta)).norm() < 1e-14);
  }
}

TEST_CASE("log inverts exp including near pi") {
  std::uniform_real_distribution<double> mag(1e-8, M_PI - 1e-6);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d theta = random_vec().normalized() * mag(rng);
    const Eigen::Vector3d back = so3::log(so3::exp(theta));
    CHECK((back - theta).norm() < 1e-9 * std::max(1.0, theta.norm()));
  }
  // Dedicated sweep just below pi where the generic formula loses precision.
  std::uniform_real_distribution<double> eps(1e-12, 1e-4);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d theta =
        random_vec().normalized() * (M_PI - eps(rng));
    const Eigen::Vector3d back = so3::log(so3::exp(theta));
    CHECK((so3::exp(back) - so3::exp(theta)).norm() < 1e-9);
    CHECK(std::abs(back.norm() - theta.norm()) < 1e-9);
  }
  // Exactly pi: axis sign is canonical but exp must still match.
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d theta = random_vec().normalized() * M_PI;
    const Eigen::Vector3d back = so3::log(so3::exp(theta));
    CHECK((so3::exp(back) - so3::exp(theta)).norm() < 1e-9);
  }
}

TEST_CASE("log rejects non-rotation input") {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 0) = 1.5;
  CHECK_THROWS_AS(so3::log(m), std::invalid_argument);
  Eigen::Matrix3d refl = Eigen::Matrix3d::Identity();
  refl(2, 2) = -1.0;  // determinant -1
  CHECK_THROWS_AS(so3::log(refl), std::invalid_argument);
}

TEST_CASE("right jacobian matches finite differences of exp") {
  // d/d(dtheta) log( exp(theta)^T exp(theta + dtheta) ) at 0 is J_r(theta).
  std::uniform_real_distribution<double> mag(1e-3, 3.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d theta = random_vec().normalized() * mag(rng);
    const Eigen::Matrix3d base = so3::exp(theta);
    auto f = [&](const Eigen::VectorXd &d) -> Eigen::VectorXd {
      return so3::log(base.transpose() * so3::exp(theta + Eigen::Vector3d(d)));
    };
    const Eigen::MatrixXd fd =
        oracle::jacobian_fd(f, Eigen::Vector3d::Zero(), 1e-7);
    CHECK(oracle::rel_err(so3::right_jacobian(theta), fd) < 1e-6);
  }
}

TEST_CASE("right jacobian inverse and left jacobian identities") {
  std::uniform_real_distribution<double> mag(1e-9, 3.0);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d theta = random_vec().normalized() * mag(rng);
    const Eigen::Matrix3d jr = so3::right_jacobian(theta);
    const Eigen::Matrix3d jr_inv = so3::right_jacobian_inv(theta);
    CHECK((jr * jr_inv - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    // J_l(theta) = J_r(-theta) = J_r(theta)^T.
    CHECK((so3::left_jacobian(theta) - so3::right_jacobian(-theta)).norm() <
          1e-12);
    // exp(theta) J_r(theta) = J_l(theta).
    CHECK((so3::exp(theta) * jr - so3::left_jacobian(theta)).norm() < 1e-12);
  }
  CHECK_THROWS_AS(
      so3::right_jacobian_inv(Eigen::Vector3d(M_PI + 0.1, 0, 0)),
      std::invalid_argument);
}

TEST_CASE("directional derivative of J_r(theta) v against finite differences") {
  std::uniform_real_distribution<double> mag(1e-3, 3.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d theta = random_vec().normalized() * mag(rng);
    const Eigen::Vector3d v = random_vec();
    auto f = [&](const Eigen::VectorXd &th) -> Eigen::VectorXd {
      return so3::right_jacobian(Eigen::Vector3d(th)) * v;
    };
    const Eigen::MatrixXd fd = oracle::jacobian_fd(f, theta, 1e-6);
    CHECK(oracle::rel_err(so3::d_right_jacobian_v(theta, v), fd) < 1e-6);
  }
  // Small-angle series branch.  A wider step keeps the difference quotient
  // clear of the 1-cos cancellation noise near zero.
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d theta = random_vec() * 1e-5;
    const Eigen::Vector3d v = random_vec();
    auto f = [&](const Eigen::VectorXd &th) -> Eigen::VectorXd {
      return so3::right_jacobian(Eigen::Vector3d(th)) * v;
    };
    const Eigen::MatrixXd fd = oracle::jacobian_fd(f, theta, 1e-4);
    CHECK(oracle::rel_err(so3::d_right_jacobian_v(theta, v), fd) < 1e-5);
  }
}

TEST_CASE("directional derivative of J_r^{-1}(theta) v against finite differences") {
  std::uniform_real_distribution<double> mag(1e-3, 2.5);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d theta = random_vec().normalized() * mag(rng);
    const Eigen::Vector3d v = random_vec();
    auto f = [&](const Eigen::VectorXd &th) -> Eigen::VectorXd {
      return so3::right_jacobian_inv(Eigen::Vector3d(th)) * v;
    };
    const Eigen::MatrixXd fd = oracle::jacobian_fd(f, theta, 1e-6);
    CHECK(oracle::rel_err(so3::d_right_jacobian_inv_v(theta, v), fd) < 1e-5);
  }
}
