#include <doctest.h>

#include <functional>
#include <random>

#include "gplio/factors.hpp"
#include "gplio/so3.hpp"
#include "gplio/trajectory.hpp"
#include "oracles.hpp"

using namespace gplio;

namespace {

std::mt19937_64 rng(23);
Eigen::Vector3d random_vec(double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return {g(rng), g(rng), g(rng)};
}

KnotState random_knot(const StateLayout &layout, int64_t t_ns) {
  KnotState x = KnotState::zero(layout, t_ns);
  x.R = so3::exp(random_vec(0.7));
  x.omega = random_vec(1.5);
  x.p = random_vec(2.0);
  x.v = random_vec(1.0);
  x.a = random_vec(1.0);
  for (auto &b : x.bg) b = random_vec(0.05);
  for (auto &b : x.ba) b = random_vec(0.1);
  return x;
}

// Joint central-difference check of a binary factor's analytic Jacobians over
// the boxplus increments of both knots.
void check_binary(const StateLayout &layout, const KnotState &x1,
                  const KnotState &x2,
                  const std::function<FactorBlocks(const KnotState &,
                                                   const KnotState &)> &factor,
                  double tol = 1e-4) {
  const FactorBlocks f0 = factor(x1, x2);
  const int d = layout.dim;
  auto g = [&](const Eigen::VectorXd &delta) -> Eigen::VectorXd {
    const KnotState y1 = boxplus(x1, layout, delta.head(d));
    const KnotState y2 = boxplus(x2, layout, delta.tail(d));
    return factor(y1, y2).r;
  };
  const Eigen::MatrixXd fd =
      oracle::jacobian_fd(g, Eigen::VectorXd::Zero(2 * d), 1e-6);
  Eigen::MatrixXd analytic(f0.r.size(), 2 * d);
  analytic << f0.J1, f0.J2;
  CHECK(oracle::rel_err(analytic, fd) < tol);
}

StateConfig make_config(RotationModel rot, TranslationModel trans, int gyros,
                        int accels) {
  StateConfig cfg;
  cfg.rotation = rot;
  cfg.translation = trans;
  cfg.num_lidars = 1;
  cfg.num_gyros = gyros;
  cfg.num_accels = accels;
  return cfg;
}

const std::pair<RotationModel, TranslationModel> kPlainCombos[] = {
    {RotationModel::kRandomWalk, TranslationModel::kRandomWalk},
    {RotationModel::kRandomWalk, TranslationModel::kConstantAcceleration},
    {RotationModel::kConstantVelocity, TranslationModel::kRandomWalk},
    {RotationModel::kConstantVelocity, TranslationModel::kConstantVelocity},
    {RotationModel::kConstantVelocity, TranslationModel::kConstantAcceleration},
};

}  // namespace

TEST_CASE("point-to-plane jacobians match finite differences") {
  const double dt = 0.04;
  int trial = 0;
  for (int i = 0; i < 100; ++i) {
    StateConfig cfg;
    if (i % 6 == 5) {
      cfg = make_config(RotationModel::kGyroAided, TranslationModel::kAccelAided,
                        1, 1);
    } else {
      const auto &[r, t] = kPlainCombos[i % 6];
      cfg = make_config(r, t, 0, 0);
    }
    const StateLayout layout = StateLayout::make(cfg);
    const KnotState x1 = random_knot(layout, 0);
    const KnotState x2 = random_knot(layout, to_ns(dt));
    const double tau = (0.05 + 0.9 * (trial++ % 10) / 10.0) * dt;

    Eigen::Isometry3d ext = Eigen::Isometry3d::Identity();
    ext.linear() = so3::exp(random_vec(0.3));
    ext.translation() = random_vec(0.1);
    const Eigen::Vector3d pt = random_vec(3.0);
    PlaneFit plane;
    plane.valid = true;
    plane.normal = random_vec().normalized();
    plane.point = random_vec(3.0);

    check_binary(layout, x1, x2,
                 [&](const KnotState &a, const KnotState &b) {
                   SegmentInterp si(layout, a, b, tau);
                   return lidar_plane_factor(si, ext, pt, plane);
                 });
  }
}

TEST_CASE("gyro jacobians match finite differences") {
  const double dt = 0.04;
  for (int i = 0; i < 100; ++i) {
    const int gyros = 1 + i % 2;
    const TranslationModel trans = i % 3 == 0
                                       ? TranslationModel::kRandomWalk
                                       : TranslationModel::kAccelAided;
    StateConfig cfg = make_config(RotationModel::kGyroAided, trans, gyros,
                                  trans == TranslationModel::kAccelAided ? 1 : 0);
    const StateLayout layout = StateLayout::make(cfg);
    const KnotState x1 = random_knot(layout, 0);
    const KnotState x2 = random_knot(layout, to_ns(dt));
    const double tau = (0.05 + 0.9 * (i % 11) / 11.0) * dt;
    const Eigen::Matrix3d ext = so3::exp(random_vec(0.3));
    const Eigen::Vector3d meas = random_vec(2.0);
    const int idx = i % gyros;

    check_binary(layout, x1, x2, [&](const KnotState &a, const KnotState &b) {
      SegmentInterp si(layout, a, b, tau);
      return gyro_factor(si, ext, idx, meas);
    });
  }
}

TEST_CASE("accelerometer jacobians match finite differences") {
  const double dt = 0.04;
  for (int i = 0; i < 100; ++i) {
    const int accels = 1 + i % 2;
    const RotationModel rot = i % 3 == 0 ? RotationModel::kRandomWalk
                                         : RotationModel::kGyroAided;
    StateConfig cfg = make_config(rot, TranslationModel::kAccelAided,
                                  rot == RotationModel::kGyroAided ? 1 : 0,
                                  accels);
    const StateLayout layout = StateLayout::make(cfg);
    const KnotState x1 = random_knot(layout, 0);
    const KnotState x2 = random_knot(layout, to_ns(dt));
    const double tau = (0.05 + 0.9 * (i % 7) / 7.0) * dt;
    const Eigen::Matrix3d ext = so3::exp(random_vec(0.3));
    const Eigen::Vector3d meas = random_vec(3.0);
    const Eigen::Vector3d gravity(0.0, 0.0, 9.81);
    const int idx = i % accels;

    check_binary(layout, x1, x2, [&](const KnotState &a, const KnotState &b) {
      SegmentInterp si(layout, a, b, tau);
      return accel_factor(si, ext, idx, meas, gravity);
    });
  }
}

TEST_CASE("motion-prior jacobians match finite differences") {
  const double dt = 0.04;
  for (int i = 0; i < 100; ++i) {
    StateConfig cfg;
    switch (i % 6) {
      case 0:
        cfg = make_config(RotationModel::kRandomWalk,
                          TranslationModel::kRandomWalk, 0, 0);
        break;
      case 1:
        cfg = make_config(RotationModel::kRandomWalk,
                          TranslationModel::kConstantVelocity, 0, 0);
        break;
      case 2:
        cfg = make_config(RotationModel::kConstantVelocity,
                          TranslationModel::kConstantAcceleration, 0, 0);
        break;
      case 3:
        cfg = make_config(RotationModel::kGyroAided,
                          TranslationModel::kRandomWalk, 2, 0);
        break;
      case 4:
        cfg = make_config(RotationModel::kConstantVelocity,
                          TranslationModel::kAccelAided, 0, 2);
        break;
      default:
        cfg = make_config(RotationModel::kGyroAided,
                          TranslationModel::kAccelAided, 1, 1);
        break;
    }
    const StateLayout layout = StateLayout::make(cfg);
    const KnotState x1 = random_knot(layout, 0);
    const KnotState x2 = random_knot(layout, to_ns(dt));

    check_binary(layout, x1, x2, [&](const KnotState &a, const KnotState &b) {
      return gp_prior_factor(layout, a, b, dt);
    });
  }
}

TEST_CASE("motion-prior residual vanishes on deterministic propagation") {
  StateConfig cfg = make_config(RotationModel::kGyroAided,
                                TranslationModel::kAccelAided, 1, 1);
  Trajectory traj(cfg, to_ns(0.04));
  const StateLayout layout = traj.layout();
  for (int i = 0; i < 20; ++i) {
    const KnotState x1 = random_knot(layout, 0);
    const KnotState x2 = traj.propagate_knot(x1);
    const FactorBlocks f = gp_prior_factor(layout, x1, x2, 0.04);
    CHECK(f.r.norm() < 1e-12);
  }
}

TEST_CASE("anchor jacobian matches finite differences") {
  for (int i = 0; i < 100; ++i) {
    StateConfig cfg = make_config(RotationModel::kGyroAided,
                                  TranslationModel::kAccelAided, 1 + i % 2, 1);
    const StateLayout layout = StateLayout::make(cfg);
    const KnotState mean = random_knot(layout, 0);
    KnotState x = random_knot(layout, 0);
    const UnaryFactorBlocks f0 = anchor_factor(layout, x, mean);
    auto g = [&](const Eigen::VectorXd &delta) -> Eigen::VectorXd {
      return anchor_factor(layout, boxplus(x, layout, delta), mean).r;
    };
    const Eigen::MatrixXd fd =
        oracle::jacobian_fd(g, Eigen::VectorXd::Zero(layout.dim), 1e-6);
    CHECK(oracle::rel_err(f0.J, fd) < 1e-4);
    // Residual is the boxminus coordinate itself.
    CHECK((f0.r - boxminus(x, mean, layout)).norm() < 1e-12);
  }
}

TEST_CASE("interpolated state inside the factor chain matches the trajectory") {
  StateConfig cfg = make_config(RotationModel::kGyroAided,
                                TranslationModel::kAccelAided, 1, 1);
  const StateLayout layout = StateLayout::make(cfg);
  const double dt = 0.04;
  for (int i = 0; i < 20; ++i) {
    const KnotState x1 = random_knot(layout, 0);
    const KnotState x2 = random_knot(layout, to_ns(dt));
    const double tau = 0.01 + 0.02 * (i / 20.0);
    SegmentInterp si(layout, x1, x2, tau);
    const KnotState q = interpolate_state(layout, x1, x2, to_ns(tau));
    CHECK((si.R_tau - q.R).norm() < 1e-9);
    CHECK((si.w_tau - q.omega).norm() < 1e-9);
    CHECK((si.p_tau - q.p).norm() < 1e-9);
  }
}
