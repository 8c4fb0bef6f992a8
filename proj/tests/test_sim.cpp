#include <doctest.h>

#include <random>
#include <sstream>

#include "gplio/io.hpp"
#include "gplio/sim.hpp"
#include "gplio/so3.hpp"
#include "gplio/trajectory.hpp"

using namespace gplio;

namespace {

// Serializes records for byte-level comparison between runs.
std::string digest(const std::vector<Record> &records) {
  std::ostringstream os;
  for (const auto &r : records)
    os << static_cast<int>(r.kind) << ',' << r.sensor << ',' << r.t_ns << ','
       << r.value.x() << ',' << r.value.y() << ',' << r.value.z() << ','
       << r.saturated << '\n';
  return os.str();
}

SimInputs base_inputs(const std::string &motion_kind) {
  SimInputs in;
  in.duration = 4.0;
  in.motion.kind = motion_kind;
  in.patches = PlaneWorld::corner_room(40.0, 8.0).patches();
  in.lidars.push_back({});
  in.gyros.push_back({});
  in.accels.push_back({});
  return in;
}

}  // namespace

TEST_CASE("truth motion derivatives are self-consistent") {
  for (const char *kind : {"stationary", "line", "spin", "figure_eight",
                           "waypoints"}) {
    MotionConfig cfg;
    cfg.kind = kind;
    cfg.waypoints = {{0, 0, 0}, {1, 0.5, 0}, {2, -0.5, 0.2}, {3, 0, 0}};
    // The waypoint spline is C1: acceleration may step exactly at junctions,
    // so the spacing is chosen to keep the probe times off them.
    cfg.waypoint_spacing = 1.7;
    const TruthMotion motion(cfg);
    const double h = 1e-6;
    for (double t : {0.2, 0.7, 1.1, 1.9, 2.6, 3.4, 5.0}) {
      const auto sm = motion.at(t - h), sp = motion.at(t + h);
      const auto sc = motion.at(t);
      // v = dp/dt, a = dv/dt.
      CHECK(((sp.p - sm.p) / (2 * h) - sc.v).norm() < 1e-5);
      CHECK(((sp.v - sm.v) / (2 * h) - sc.a).norm() < 2e-4);
      // Body rate: R^T dR/dt = hat(w).
      const Eigen::Vector3d w_fd =
          so3::log(sm.R.transpose() * sp.R) / (2 * h);
      CHECK((w_fd - sc.w).norm() < 1e-5);
      // Rotations stay orthonormal.
      CHECK((sc.R.transpose() * sc.R - Eigen::Matrix3d::Identity()).norm() <
            1e-12);
    }
  }
}

TEST_CASE("motion holds still before the start time and ramps smoothly") {
  MotionConfig cfg;
  cfg.kind = "line";
  cfg.t_start = 0.5;
  cfg.t_ramp = 1.0;
  cfg.velocity = {2.0, 0.0, 0.0};
  const TruthMotion motion(cfg);
  CHECK(motion.at(0.0).p.norm() == doctest::Approx(0.0));
  CHECK(motion.at(0.49).v.norm() == doctest::Approx(0.0));
  // No velocity jump at the ramp start, and full speed afterwards.
  CHECK(motion.at(0.500001).v.norm() < 1e-3);
  CHECK(motion.at(2.0).v.x() == doctest::Approx(2.0));
  CHECK(motion.at(2.0).a.norm() == doctest::Approx(0.0));
}

TEST_CASE("raycast returns the nearest in-bounds patch hit") {
  std::vector<Patch> patches(2);
  patches[0].corner = {2.0, -1.0, -1.0};
  patches[0].edge_u = {0.0, 2.0, 0.0};
  patches[0].edge_v = {0.0, 0.0, 2.0};  // plane x = 2
  patches[1].corner = {5.0, -1.0, -1.0};
  patches[1].edge_u = {0.0, 2.0, 0.0};
  patches[1].edge_v = {0.0, 0.0, 2.0};  // plane x = 5
  const PlaneWorld world(patches);

  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  auto hit = world.raycast(origin, {1, 0, 0}, 60.0);
  REQUIRE(hit.has_value());
  CHECK(*hit == doctest::Approx(2.0));
  // Beyond the patch bounds: miss the near plane, hit the far one... also out.
  CHECK_FALSE(world.raycast(origin, {0.5, 2.0, 0.0}, 60.0).has_value());
  // Away from both planes.
  CHECK_FALSE(world.raycast(origin, {-1, 0, 0}, 60.0).has_value());
  // Range-limited.
  CHECK_FALSE(world.raycast(origin, {1, 0, 0}, 1.5).has_value());

  CHECK_THROWS_AS(PlaneWorld({}), std::invalid_argument);
  Patch bad;
  bad.edge_u = {1.0, 0.0, 0.0};
  bad.edge_v = {1.0, 1.0, 0.0};  // not orthogonal
  CHECK_THROWS_AS(PlaneWorld({bad}), std::invalid_argument);
}

TEST_CASE("corner room constrains all axes") {
  const PlaneWorld world = PlaneWorld::corner_room(40.0, 8.0);
  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  CHECK(*world.raycast(origin, {1, 0, 0}, 60.0) == doctest::Approx(8.0));
  CHECK(*world.raycast(origin, {0, 1, 0}, 60.0) == doctest::Approx(8.0));
  CHECK(*world.raycast(origin, {0, 0, -1}, 60.0) == doctest::Approx(1.0));
}

TEST_CASE("simulation is deterministic per seed") {
  const SimInputs in = base_inputs("figure_eight");
  const SimResult a = simulate(in);
  const SimResult b = simulate(in);
  CHECK(digest(a.records) == digest(b.records));
  CHECK(a.records.size() > 1000);

  SimInputs other = in;
  other.seed = 2;
  const SimResult c = simulate(other);
  CHECK(digest(a.records) != digest(c.records));
}

TEST_CASE("records are sorted and stationary sensors read gravity") {
  SimInputs in = base_inputs("stationary");
  in.duration = 2.0;
  const SimResult res = simulate(in);
  for (std::size_t i = 1; i < res.records.size(); ++i)
    CHECK(res.records[i - 1].t_ns <= res.records[i].t_ns);

  Eigen::Vector3d accel_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d gyro_mean = Eigen::Vector3d::Zero();
  int na = 0, ng = 0;
  for (const auto &r : res.records) {
    if (r.kind == SensorKind::kAccel) {
      accel_mean += r.value;
      ++na;
    } else if (r.kind == SensorKind::kGyro) {
      gyro_mean += r.value;
      ++ng;
    }
  }
  REQUIRE(na > 100);
  accel_mean /= na;
  gyro_mean /= ng;
  CHECK((accel_mean - Eigen::Vector3d(0, 0, 9.81)).norm() < 5e-3);
  CHECK(gyro_mean.norm() < 5e-4);
}

TEST_CASE("lidar points land on the world surfaces") {
  SimInputs in = base_inputs("stationary");
  in.duration = 1.0;
  const SimResult res = simulate(in);
  int checked = 0;
  for (const auto &r : res.records) {
    if (r.kind != SensorKind::kLidar) continue;
    // Stationary at the origin with identity extrinsic: world point equals
    // the recorded point. It must lie on one of the three room planes.
    const Eigen::Vector3d p = r.value;
    const double d = std::min({std::abs(p.x() - 8.0), std::abs(p.y() - 8.0),
                               std::abs(p.z() + 1.0)});
    CHECK(d < 6 * 0.02);  // range noise along an oblique ray
    ++checked;
  }
  CHECK(checked > 500);
}

TEST_CASE("dropout faults remove only the targeted stream") {
  SimInputs in = base_inputs("figure_eight");
  SimInputs faulty = in;
  faulty.faults.push_back({SensorKind::kGyro, 0, 1.0, 2.0});
  const SimResult clean = simulate(in);
  const SimResult broken = simulate(faulty);
  CHECK(broken.dropped > 100);

  int in_window = 0;
  std::string clean_rest, broken_rest;
  for (const auto &r : clean.records)
    if (!(r.kind == SensorKind::kGyro && r.t_ns >= to_ns(1.0) &&
          r.t_ns < to_ns(2.0)))
      clean_rest += digest({r});
  for (const auto &r : broken.records) {
    if (r.kind == SensorKind::kGyro && r.t_ns >= to_ns(1.0) &&
        r.t_ns < to_ns(2.0))
      ++in_window;
    else
      broken_rest += digest({r});
  }
  CHECK(in_window == 0);
  // Every sample outside the fault is byte-identical to the clean run.
  CHECK(clean_rest == broken_rest);
}

TEST_CASE("saturation clamps and flags fast spins") {
  SimInputs in = base_inputs("spin");
  in.motion.spin_rate = 20.0;  // beyond the 17.5 rad/s limit
  in.motion.t_start = 0.2;
  in.motion.t_ramp = 0.5;
  const SimResult res = simulate(in);
  CHECK(res.saturated > 100);
  int flagged = 0;
  for (const auto &r : res.records) {
    if (r.kind != SensorKind::kGyro) continue;
    CHECK(r.value.cwiseAbs().maxCoeff() <= 17.5 + 1e-12);
    if (r.saturated) {
      ++flagged;
      CHECK(std::abs(r.value.z()) == doctest::Approx(17.5));
    }
  }
  CHECK(flagged == static_cast<int>(res.saturated));
}

TEST_CASE("ate evaluation removes a rigid offset and scores noise") {
  SimInputs in = base_inputs("figure_eight");
  in.duration = 6.0;
  const SimResult res = simulate(in);

  Eigen::Isometry3d offset = Eigen::Isometry3d::Identity();
  offset.linear() = so3::exp(Eigen::Vector3d(0.1, -0.2, 0.3));
  offset.translation() = Eigen::Vector3d(5.0, -2.0, 1.0);

  std::vector<PoseSample> shifted;
  for (const auto &p : res.truth) shifted.push_back({p.t_ns, offset * p.pose});
  const AteResult exact = evaluate_ate(shifted, res.truth);
  CHECK(exact.matched == static_cast<int>(res.truth.size()));
  CHECK(exact.rmse < 1e-9);
  CHECK(exact.rot_rmse_deg < 1e-6);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<PoseSample> noisy = shifted;
  for (auto &p : noisy)
    p.pose.translation() += Eigen::Vector3d(g(rng), g(rng), g(rng));
  const AteResult withnoise = evaluate_ate(noisy, res.truth);
  const double expected = 0.05 * std::sqrt(3.0);
  CHECK(withnoise.rmse > 0.5 * expected);
  CHECK(withnoise.rmse < 1.5 * expected);
  CHECK(withnoise.max >= withnoise.rmse);

  // Timestamps too far apart to associate.
  std::vector<PoseSample> late = shifted;
  for (auto &p : late) p.t_ns += to_ns(100.0);
  CHECK_THROWS_AS(evaluate_ate(late, res.truth), std::runtime_error);
}
