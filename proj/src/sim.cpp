#include "gplio/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Geometry>

#include "gplio/so3.hpp"
#include "gplio/trajectory.hpp"

namespace gplio {

/* ---- ground-truth motion ------------------------------------------------- */

TruthMotion::TruthMotion(const MotionConfig &cfg) : cfg_(cfg) {
  if (cfg_.kind != "stationary" && cfg_.kind != "line" && cfg_.kind != "spin" &&
      cfg_.kind != "figure_eight" && cfg_.kind != "waypoints")
    throw std::invalid_argument("TruthMotion: unknown kind " + cfg_.kind);
  if (cfg_.kind == "waypoints" && cfg_.waypoints.size() < 2)
    throw std::invalid_argument("TruthMotion: need at least 2 waypoints");
}

// 7th-order smoothstep: e(0)=0, e(1)=1 and zero 1st..3rd derivatives at both
// ends, so velocity and acceleration blend in without jerk discontinuities.
namespace {
double smooth(double x) {
  const double x2 = x * x, x3 = x2 * x, x4 = x3 * x;
  return x4 * (35.0 - 84.0 * x + 70.0 * x2 - 20.0 * x3);
}
double smooth_d(double x) {
  const double y = x * (1.0 - x);
  return 140.0 * y * y * y;
}
double smooth_int(double x) {  // antiderivative, zero at 0
  const double x2 = x * x, x4 = x2 * x2, x5 = x4 * x;
  return x5 * (7.0 - 14.0 * x + 10.0 * x2 - 2.5 * x2 * x);
}
}  // namespace

void TruthMotion::warp(double t, double *s, double *ds, double *dds) const {
  const double u = t - cfg_.t_start;
  if (u <= 0.0) {
    *s = *ds = *dds = 0.0;
    return;
  }
  if (cfg_.t_ramp <= 0.0 || u >= cfg_.t_ramp) {
    const double ramp_area =
        cfg_.t_ramp > 0.0 ? cfg_.t_ramp * smooth_int(1.0) : 0.0;
    *s = ramp_area + (u - cfg_.t_ramp);
    *ds = 1.0;
    *dds = 0.0;
    return;
  }
  const double x = u / cfg_.t_ramp;
  *s = cfg_.t_ramp * smooth_int(x);
  *ds = smooth(x);
  *dds = smooth_d(x) / cfg_.t_ramp;
}

TruthMotion::State TruthMotion::at(double t) const {
  State st;
  double s, ds, dds;
  warp(t, &s, &ds, &dds);

  if (cfg_.kind == "stationary") return st;

  if (cfg_.kind == "line") {
    st.p = cfg_.velocity * s;
    st.v = cfg_.velocity * ds;
    st.a = cfg_.velocity * dds;
    return st;
  }

  if (cfg_.kind == "spin") {
    const Eigen::Vector3d axis = cfg_.spin_axis.normalized();
    st.R = so3::exp(axis * (cfg_.spin_rate * s));
    // J_r(axis * phi) * axis = axis, so the body rate is exactly along axis.
    st.w = axis * (cfg_.spin_rate * ds);
    return st;
  }

  if (cfg_.kind == "figure_eight") {
    const double u = 2.0 * M_PI * cfg_.frequency * s;
    const double du = 2.0 * M_PI * cfg_.frequency * ds;
    const double ddu = 2.0 * M_PI * cfg_.frequency * dds;
    const auto &amp = cfg_.amplitude;
    // Lemniscate-like loop: y runs at double the x frequency.
    st.p = {amp.x() * std::sin(u), amp.y() * std::sin(2.0 * u),
            amp.z() * 0.5 * (1.0 - std::cos(2.0 * u))};
    st.v = {amp.x() * std::cos(u) * du, amp.y() * std::cos(2.0 * u) * 2.0 * du,
            amp.z() * std::sin(2.0 * u) * du};
    st.a = {amp.x() * (std::cos(u) * ddu - std::sin(u) * du * du),
            amp.y() * 2.0 * (std::cos(2.0 * u) * ddu -
                             std::sin(2.0 * u) * 2.0 * du * du),
            amp.z() * (std::sin(2.0 * u) * ddu +
                       std::cos(2.0 * u) * 2.0 * du * du)};
    // Per-axis rotation-vector oscillation; the body rate follows from the
    // right Jacobian of the rotation vector.
    Eigen::Vector3d theta, dtheta;
    for (int i = 0; i < 3; ++i) {
      const double w = 2.0 * M_PI * cfg_.rot_frequency[i];
      theta[i] = cfg_.rot_amplitude[i] * std::sin(w * s);
      dtheta[i] = cfg_.rot_amplitude[i] * std::cos(w * s) * w * ds;
    }
    st.R = so3::exp(theta);
    st.w = so3::right_jacobian(theta) * dtheta;
    return st;
  }

  // waypoints: uniform Catmull-Rom in warped time, clamped at the ends.
  const auto &wp = cfg_.waypoints;
  const int nseg = static_cast<int>(wp.size()) - 1;
  const double total = nseg * cfg_.waypoint_spacing;
  double q = s;
  if (q >= total) {
    st.p = wp.back();
    return st;
  }
  const int seg = std::min(nseg - 1, static_cast<int>(q / cfg_.waypoint_spacing));
  const double x = q / cfg_.waypoint_spacing - seg;  // local parameter in [0,1)
  auto ctrl = [&](int i) {
    return wp[std::clamp(i, 0, nseg)];
  };
  const Eigen::Vector3d p0 = ctrl(seg - 1), p1 = ctrl(seg), p2 = ctrl(seg + 1),
                        p3 = ctrl(seg + 2);
  // Catmull-Rom basis and its parameter derivatives.
  const double x2 = x * x, x3 = x2 * x;
  const Eigen::Vector3d c =
      0.5 * ((2.0 * p1) + (-p0 + p2) * x +
             (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * x2 +
             (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * x3);
  const Eigen::Vector3d dc =
      0.5 * ((-p0 + p2) + 2.0 * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * x +
             3.0 * (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * x2);
  const Eigen::Vector3d ddc =
      0.5 * (2.0 * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) +
             6.0 * (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * x);
  const double k = 1.0 / cfg_.waypoint_spacing;  // d x / d s
  st.p = c;
  st.v = dc * (k * ds);
  st.a = ddc * (k * ds) * (k * ds) + dc * (k * dds);
  return st;
}

/* ---- world --------------------------------------------------------------- */

PlaneWorld::PlaneWorld(std::vector<Patch> patches) : patches_(std::move(patches)) {
  if (patches_.empty()) throw std::invalid_argument("PlaneWorld: no patches");
  for (const auto &p : patches_) {
    Prepared prep;
    prep.patch = p;
    prep.u_len = p.edge_u.norm();
    prep.v_len = p.edge_v.norm();
    if (prep.u_len <= 0.0 || prep.v_len <= 0.0)
      throw std::invalid_argument("PlaneWorld: degenerate patch edge");
    prep.u_hat = p.edge_u / prep.u_len;
    prep.v_hat = p.edge_v / prep.v_len;
    if (std::abs(prep.u_hat.dot(prep.v_hat)) > 1e-9)
      throw std::invalid_argument("PlaneWorld: patch edges must be orthogonal");
    prep.n = prep.u_hat.cross(prep.v_hat);
    patches_prep_.push_back(prep);
  }
}

std::optional<double> PlaneWorld::raycast(const Eigen::Vector3d &origin,
                                          const Eigen::Vector3d &dir,
                                          double max_range) const {
  double best = max_range;
  bool hit = false;
  for (const auto &prep : patches_prep_) {
    const double denom = prep.n.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double t = prep.n.dot(prep.patch.corner - origin) / denom;
    if (t <= 1e-6 || t > best) continue;
    const Eigen::Vector3d local = origin + t * dir - prep.patch.corner;
    const double u = prep.u_hat.dot(local);
    const double v = prep.v_hat.dot(local);
    if (u < 0.0 || u > prep.u_len || v < 0.0 || v > prep.v_len) continue;
    best = t;
    hit = true;
  }
  if (!hit) return std::nullopt;
  return best;
}

PlaneWorld PlaneWorld::corner_room(double extent, double dist) {
  const double h = 0.5 * extent;
  std::vector<Patch> patches(3);
  // Floor at z = -1.
  patches[0].corner = {-h, -h, -1.0};
  patches[0].edge_u = {extent, 0.0, 0.0};
  patches[0].edge_v = {0.0, extent, 0.0};
  // Wall at x = dist.
  patches[1].corner = {dist, -h, -1.0};
  patches[1].edge_u = {0.0, extent, 0.0};
  patches[1].edge_v = {0.0, 0.0, extent};
  // Wall at y = dist.
  patches[2].corner = {-h, dist, -1.0};
  patches[2].edge_u = {extent, 0.0, 0.0};
  patches[2].edge_v = {0.0, 0.0, extent};
  return PlaneWorld(std::move(patches));
}

/* ---- simulation ---------------------------------------------------------- */

namespace {

bool dropped_at(const std::vector<FaultSpec> &faults, SensorKind kind,
                int sensor, double t) {
  for (const auto &f : faults)
    if (f.kind == kind && f.sensor == sensor && t >= f.begin && t < f.end)
      return true;
  return false;
}

// Independent noise stream per sensor so that adding a fault to one sensor
// leaves every other stream byte-identical.
uint64_t stream_seed(uint64_t seed, SensorKind kind, int sensor) {
  return seed * 2654435761ull + static_cast<uint64_t>(kind) * 1000003ull +
         static_cast<uint64_t>(sensor) * 7919ull + 12345ull;
}

}  // namespace

SimResult simulate(const SimInputs &in) {
  if (in.duration <= 0.0) throw std::invalid_argument("simulate: bad duration");
  const TruthMotion motion(in.motion);
  const PlaneWorld world(in.patches);
  SimResult out;

  for (int li = 0; li < static_cast<int>(in.lidars.size()); ++li) {
    const LidarSpec &spec = in.lidars[li];
    std::mt19937_64 rng(stream_seed(in.seed, SensorKind::kLidar, li));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double period = 1.0 / spec.rate;
    const int nscans = static_cast<int>(in.duration / period + 1e-9);
    for (int s = 0; s < nscans; ++s) {
      const double t_scan = s * period;
      for (int j = 0; j < spec.columns; ++j) {
        // Per-column firing times spread across the whole scan revolution.
        const double t_pt = t_scan + period * j / spec.columns;
        const double az =
            (spec.azimuth_min_deg +
             (spec.azimuth_max_deg - spec.azimuth_min_deg) * j / spec.columns) *
            M_PI / 180.0;
        const bool drop =
            dropped_at(in.faults, SensorKind::kLidar, li, t_pt);
        const TruthMotion::State st = motion.at(t_pt);
        Eigen::Isometry3d t_ws = Eigen::Isometry3d::Identity();
        t_ws.linear() = st.R;
        t_ws.translation() = st.p;
        t_ws = t_ws * spec.extrinsic;
        for (int r = 0; r < spec.rings; ++r) {
          const double frac =
              spec.rings > 1 ? static_cast<double>(r) / (spec.rings - 1) : 0.5;
          const double elev = (spec.elev_min_deg +
                               frac * (spec.elev_max_deg - spec.elev_min_deg)) *
                              M_PI / 180.0;
          const Eigen::Vector3d dir_l{std::cos(elev) * std::cos(az),
                                      std::cos(elev) * std::sin(az),
                                      std::sin(elev)};
          const auto range = world.raycast(
              t_ws.translation(), t_ws.linear() * dir_l, spec.max_range);
          if (!range || *range < spec.min_range) continue;
          const double noisy = *range + spec.sigma * gauss(rng);
          if (drop) {
            ++out.dropped;
            continue;
          }
          Record rec;
          rec.kind = SensorKind::kLidar;
          rec.sensor = li;
          rec.t_ns = to_ns(t_pt);
          rec.value = noisy * dir_l;
          out.records.push_back(rec);
        }
      }
    }
  }

  auto sample_imu = [&](SensorKind kind, int idx, const ImuSpec &spec) {
    std::mt19937_64 rng(stream_seed(in.seed, kind, idx));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double period = 1.0 / spec.rate;
    const int n = static_cast<int>(in.duration / period + 1e-9);
    for (int k = 0; k <= n; ++k) {
      const double t = k * period;
      const TruthMotion::State st = motion.at(t);
      Eigen::Vector3d truth_body;
      if (kind == SensorKind::kGyro)
        truth_body = st.w + spec.bias;
      else
        truth_body = st.R.transpose() * (st.a + in.gravity) + spec.bias;
      Eigen::Vector3d value = spec.extrinsic.transpose() * truth_body;
      for (int i = 0; i < 3; ++i) value[i] += spec.sigma * gauss(rng);
      if (dropped_at(in.faults, kind, idx, t)) {
        ++out.dropped;
        continue;
      }
      Record rec;
      rec.kind = kind;
      rec.sensor = idx;
      rec.t_ns = to_ns(t);
      if (spec.saturation > 0.0) {
        for (int i = 0; i < 3; ++i) {
          if (std::abs(value[i]) > spec.saturation) {
            value[i] = std::copysign(spec.saturation, value[i]);
            rec.saturated = true;
          }
        }
      }
      if (rec.saturated) ++out.saturated;
      rec.value = value;
      out.records.push_back(rec);
    }
  };
  for (int i = 0; i < static_cast<int>(in.gyros.size()); ++i)
    sample_imu(SensorKind::kGyro, i, in.gyros[i]);
  for (int i = 0; i < static_cast<int>(in.accels.size()); ++i)
    sample_imu(SensorKind::kAccel, i, in.accels[i]);

  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const Record &a, const Record &b) {
                     if (a.t_ns != b.t_ns) return a.t_ns < b.t_ns;
                     if (a.kind != b.kind) return a.kind < b.kind;
                     return a.sensor < b.sensor;
                   });

  const double tperiod = 1.0 / in.truth_rate;
  const int ntruth = static_cast<int>(in.duration / tperiod + 1e-9);
  for (int k = 0; k <= ntruth; ++k) {
    const double t = k * tperiod;
    const TruthMotion::State st = motion.at(t);
    PoseSample ps;
    ps.t_ns = to_ns(t);
    ps.pose.linear() = st.R;
    ps.pose.translation() = st.p;
    out.truth.push_back(ps);
  }
  return out;
}

/* ---- evaluation ---------------------------------------------------------- */

AteResult evaluate_ate(const std::vector<PoseSample> &estimate,
                       const std::vector<PoseSample> &truth,
                       int64_t max_gap_ns) {
  if (truth.size() < 2 || estimate.empty())
    throw std::runtime_error("evaluate_ate: empty trajectories");

  std::vector<std::pair<const PoseSample *, const PoseSample *>> pairs;
  for (const auto &e : estimate) {
    auto it = std::lower_bound(
        truth.begin(), truth.end(), e.t_ns,
        [](const PoseSample &a, int64_t t) { return a.t_ns < t; });
    const PoseSample *best = nullptr;
    int64_t best_gap = max_gap_ns + 1;
    for (auto cand : {it, it == truth.begin() ? it : std::prev(it)}) {
      if (cand == truth.end()) continue;
      const int64_t gap = std::abs(cand->t_ns - e.t_ns);
      if (gap < best_gap) {
        best_gap = gap;
        best = &*cand;
      }
    }
    if (best) pairs.emplace_back(&e, best);
  }
  if (pairs.size() < 3)
    throw std::runtime_error("evaluate_ate: too few matched timestamps");

  Eigen::Matrix3Xd src(3, pairs.size()), dst(3, pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    src.col(i) = pairs[i].first->pose.translation();
    dst.col(i) = pairs[i].second->pose.translation();
  }
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
  Eigen::Isometry3d align(t);

  AteResult res;
  res.matched = static_cast<int>(pairs.size());
  res.alignment = align;
  double sum2 = 0.0, sum = 0.0, rot2 = 0.0;
  Eigen::Vector3d axis2 = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d e = dst.col(i) - align * src.col(i);
    sum2 += e.squaredNorm();
    sum += e.norm();
    res.max = std::max(res.max, e.norm());
    axis2 += e.cwiseProduct(e);
    const Eigen::Matrix3d r_est = align.linear() * pairs[i].first->pose.linear();
    const Eigen::Vector3d werr =
        so3::log(r_est.transpose() * pairs[i].second->pose.linear());
    rot2 += werr.squaredNorm();
  }
  const double n = static_cast<double>(pairs.size());
  res.rmse = std::sqrt(sum2 / n);
  res.mean = sum / n;
  res.per_axis_rmse = (axis2 / n).cwiseSqrt();
  res.rot_rmse_deg = std::sqrt(rot2 / n) * 180.0 / M_PI;
  return res;
}

}  // namespace gplio
