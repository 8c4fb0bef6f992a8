#include "gplio/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "gplio/so3.hpp"

namespace gplio {


using json = nlohmann::json;

/* -------------------------------------------------------------------------- */

Estimator::Estimator(const EstimatorConfig &cfg)
    : cfg_(cfg),
      layout_(StateLayout::make(cfg.state)),
      traj_(cfg.state, cfg.knot_spacing_ns),
      map_(cfg.map) {
  cfg_.prior.rotation = layout_.rotation_kind;
  cfg_.prior.translation = layout_.translation_kind;
  cfg_.prior.num_gyro_bias = layout_.num_gyros;
  cfg_.prior.num_accel_bias = layout_.num_accels;
  if (cfg_.prior.dim() != layout_.dim)
    throw std::logic_error("Estimator: prior/layout dimension mismatch");
  if (static_cast<int>(cfg_.extrinsics.lidar.size()) < cfg_.state.num_lidars ||
      static_cast<int>(cfg_.extrinsics.gyro.size()) < layout_.num_gyros ||
      static_cast<int>(cfg_.extrinsics.accel.size()) < layout_.num_accels)
    throw std::invalid_argument("Estimator: missing sensor extrinsics");

  const Eigen::MatrixXd q =
      cfg_.prior.process_noise(to_sec(cfg_.knot_spacing_ns));
  gp_weight_ =
      q.ldlt().solve(Eigen::MatrixXd::Identity(layout_.dim, layout_.dim));
  gp_weight_ = 0.5 * (gp_weight_ + gp_weight_.transpose());
}

Eigen::VectorXd Estimator::anchor_information() const {
  Eigen::VectorXd info(layout_.dim);
  auto put = [&](int off, double sigma) {
    if (off >= 0) info.segment<3>(off).setConstant(1.0 / (sigma * sigma));
  };
  put(layout_.rot, cfg_.anchor.rot);
  put(layout_.omega, cfg_.anchor.omega);
  put(layout_.pos, cfg_.anchor.pos);
  put(layout_.vel, cfg_.anchor.vel);
  put(layout_.acc, cfg_.anchor.acc);
  for (int i = 0; i < layout_.num_gyros; ++i)
    put(layout_.gyro_bias(i), cfg_.anchor.gyro_bias);
  for (int i = 0; i < layout_.num_accels; ++i)
    put(layout_.accel_bias(i), cfg_.anchor.accel_bias);
  return info;
}

/* -------------------------------------------------------------------------- */

InitSummary Estimator::initialize(const std::vector<Record> &init_records,
                                  int64_t t0_ns) {
  InitSummary s;
  s.t0_ns = t0_ns;
  knot0_ns_ = t0_ns + to_ns(cfg_.init_span);
  s.knot0_ns = knot0_ns_;

  std::vector<Eigen::Vector3d> gyro_sum(layout_.num_gyros,
                                        Eigen::Vector3d::Zero());
  std::vector<int> gyro_n(layout_.num_gyros, 0);
  std::vector<Eigen::Vector3d> acc_sum(layout_.num_accels,
                                       Eigen::Vector3d::Zero());
  std::vector<Eigen::Vector3d> acc_sumsq(layout_.num_accels,
                                         Eigen::Vector3d::Zero());
  std::vector<int> acc_n(layout_.num_accels, 0);
  std::vector<Eigen::Vector3d> seed;

  for (const auto &rec : init_records) {
    switch (rec.kind) {
      case SensorKind::kGyro:
        if (!rec.saturated && rec.sensor < layout_.num_gyros) {
          gyro_sum[rec.sensor] += rec.value;
          ++gyro_n[rec.sensor];
          ++s.gyro_samples;
        }
        break;
      case SensorKind::kAccel:
        if (!rec.saturated && rec.sensor < layout_.num_accels) {
          acc_sum[rec.sensor] += rec.value;
          acc_sumsq[rec.sensor] += rec.value.cwiseProduct(rec.value);
          ++acc_n[rec.sensor];
          ++s.accel_samples;
        }
        break;
      case SensorKind::kLidar:
        if (rec.sensor < cfg_.state.num_lidars)
          seed.push_back(cfg_.extrinsics.lidar[rec.sensor] * rec.value);
        break;
    }
  }

  // The platform is assumed still: gyro means become biases, the accelerometer
  // mean (mapped to the body frame) is the gravity-reaction direction.
  KnotState x0 = KnotState::zero(layout_, knot0_ns_);
  for (int i = 0; i < layout_.num_gyros; ++i) {
    if (gyro_n[i] > 0) {
      const Eigen::Vector3d mean = gyro_sum[i] / gyro_n[i];
      x0.bg[i] = cfg_.extrinsics.gyro[i] * mean;
      if (mean.norm() > 0.5) s.stationary_warning = true;
    }
  }
  Eigen::Vector3d g_acc = Eigen::Vector3d::Zero();
  int g_sensors = 0;
  for (int i = 0; i < layout_.num_accels; ++i) {
    if (acc_n[i] > 0) {
      const Eigen::Vector3d mean = acc_sum[i] / acc_n[i];
      g_acc += cfg_.extrinsics.accel[i] * mean;
      ++g_sensors;
      const Eigen::Vector3d var =
          acc_sumsq[i] / acc_n[i] - mean.cwiseProduct(mean);
      if (var.maxCoeff() > cfg_.init_var_warn) s.stationary_warning = true;
    }
  }
  if (g_sensors > 0) {
    gravity_ = g_acc / g_sensors;
    s.gravity_from_accel = true;
  } else {
    gravity_ = cfg_.gravity_default;
  }
  s.gravity = gravity_;

  s.map_points = map_.insert(seed);
  traj_.reset(x0);
  window_batches_.clear();
  archive_.clear();

  marg_lin_ = x0;
  marg_H_ = anchor_information().asDiagonal();
  marg_b_ = Eigen::VectorXd::Zero(layout_.dim);
  marg_valid_ = true;
  segment_index_ = 0;
  initialized_ = true;
  any_divergence_ = false;

  emit(json{{"event", "initialized"},
            {"t0", to_sec(t0_ns)},
            {"knot0", to_sec(knot0_ns_)},
            {"gravity", {gravity_.x(), gravity_.y(), gravity_.z()}},
            {"gravity_from_accel", s.gravity_from_accel},
            {"stationary_warning", s.stationary_warning},
            {"map_points", s.map_points}}
           .dump());
  return s;
}

int64_t Estimator::next_segment_start_ns() const {
  return traj_.size() ? traj_.back_ns() : knot0_ns_;
}

/* -------------------------------------------------------------------------- */

void Estimator::associate(const std::vector<KnotState> &knots,
                          std::vector<Corr> *out, int *gated) const {
  out->clear();
  if (gated) *gated = 0;

  // Flatten (segment, record) pairs so the scan can be chunked.
  std::vector<std::pair<int, const Record *>> items;
  for (int k = 0; k < static_cast<int>(window_batches_.size()); ++k)
    for (const auto &rec : window_batches_[k].lidar)
      items.emplace_back(k, &rec);
  if (items.empty()) return;

  std::vector<Corr> slots(items.size());
  std::vector<uint8_t> ok(items.size(), 0), gate(items.size(), 0);

  auto scan = [&](std::size_t lo, std::size_t hi) {
    int64_t cached_t = std::numeric_limits<int64_t>::min();
    int cached_seg = -1;
    KnotState st;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto &[k, rec] = items[i];
      if (rec->sensor >= cfg_.state.num_lidars) continue;
      if (rec->t_ns != cached_t || k != cached_seg) {
        st = interpolate_state(layout_, knots[k], knots[k + 1], rec->t_ns);
        cached_t = rec->t_ns;
        cached_seg = k;
      }
      const Eigen::Isometry3d t_wl =
          st.pose() * cfg_.extrinsics.lidar[rec->sensor];
      const Eigen::Vector3d world = t_wl * rec->value;
      const PlaneFit fit = map_.fit_plane(world, t_wl.translation());
      if (!fit.valid) continue;
      if (std::abs(fit.normal.dot(world - fit.point)) > cfg_.corr_max_dist) {
        gate[i] = 1;
        continue;
      }
      slots[i] = Corr{k, rec, rec->value, fit};
      ok[i] = 1;
    }
  };

  const int threads = std::max(1, cfg_.threads);
  if (threads == 1 || items.size() < 256) {
    scan(0, items.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (items.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(items.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(scan, lo, hi);
    }
    for (auto &th : pool) th.join();
  }

  // Compact in record order so downstream accumulation is deterministic.
  out->reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (ok[i]) out->push_back(slots[i]);
    if (gated && gate[i]) ++*gated;
  }
}

double Estimator::evaluate_energy(const std::vector<KnotState> &knots,
                                  const std::vector<Corr> &corrs) const {
  double e = 0.0;

  const UnaryFactorBlocks af = anchor_factor(layout_, knots[0], marg_lin_);
  e += 0.5 * af.r.dot(marg_H_ * af.r) + marg_b_.dot(af.r);

  const double dt = traj_.spacing();
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const FactorBlocks f = gp_prior_factor(layout_, knots[k], knots[k + 1], dt);
    e += 0.5 * f.r.dot(gp_weight_ * f.r);
  }

  const double wl = 1.0 / (cfg_.noise.lidar_sigma * cfg_.noise.lidar_sigma);
  int64_t cached_t = std::numeric_limits<int64_t>::min();
  int cached_seg = -1;
  KnotState st;
  for (const auto &c : corrs) {
    if (c.rec->t_ns != cached_t || c.seg != cached_seg) {
      st = interpolate_state(layout_, knots[c.seg], knots[c.seg + 1],
                             c.rec->t_ns);
      cached_t = c.rec->t_ns;
      cached_seg = c.seg;
    }
    const Eigen::Vector3d world =
        st.pose() * (cfg_.extrinsics.lidar[c.rec->sensor] * c.rec->value);
    const double r = c.fit.normal.dot(world - c.fit.point);
    e += 0.5 * wl * r * r;
  }

  const double wg = 1.0 / (cfg_.noise.gyro_sigma * cfg_.noise.gyro_sigma);
  const double wa = 1.0 / (cfg_.noise.accel_sigma * cfg_.noise.accel_sigma);
  for (std::size_t k = 0; k < window_batches_.size(); ++k) {
    for (const auto &rec : window_batches_[k].gyro) {
      if (rec.saturated || rec.sensor >= layout_.num_gyros) continue;
      const KnotState si =
          interpolate_state(layout_, knots[k], knots[k + 1], rec.t_ns);
      const Eigen::Vector3d r = si.omega + si.bg[rec.sensor] -
                                cfg_.extrinsics.gyro[rec.sensor] * rec.value;
      e += 0.5 * wg * r.squaredNorm();
    }
    for (const auto &rec : window_batches_[k].accel) {
      if (rec.saturated || rec.sensor >= layout_.num_accels) continue;
      const KnotState si =
          interpolate_state(layout_, knots[k], knots[k + 1], rec.t_ns);
      const Eigen::Vector3d r =
          si.R.transpose() * (si.a + gravity_) + si.ba[rec.sensor] -
          cfg_.extrinsics.accel[rec.sensor] * rec.value;
      e += 0.5 * wa * r.squaredNorm();
    }
  }
  return e;
}

void Estimator::assemble(const std::vector<KnotState> &knots,
                         const std::vector<Corr> &corrs, NormalEquations *ne,
                         SegmentSummary *sum) const {
  const int n = static_cast<int>(knots.size());
  ne->resize(n, layout_.dim);
  sum->lidar_used = sum->gyro_used = sum->accel_used = 0;

  const UnaryFactorBlocks af = anchor_factor(layout_, knots[0], marg_lin_);
  ne->add_info(0, af.J.transpose() * marg_H_ * af.J,
               af.J.transpose() * (marg_H_ * af.r + marg_b_));

  const double dt = traj_.spacing();
  for (int k = 0; k + 1 < n; ++k) {
    const FactorBlocks f = gp_prior_factor(layout_, knots[k], knots[k + 1], dt);
    ne->add_binary(k, f.J1, f.J2, f.r, gp_weight_);
  }

  const Eigen::MatrixXd wl = Eigen::MatrixXd::Constant(
      1, 1, 1.0 / (cfg_.noise.lidar_sigma * cfg_.noise.lidar_sigma));
  {
    int64_t cached_t = std::numeric_limits<int64_t>::min();
    int cached_seg = -1;
    std::optional<SegmentInterp> si;
    for (const auto &c : corrs) {
      if (c.rec->t_ns != cached_t || c.seg != cached_seg) {
        si.emplace(layout_, knots[c.seg], knots[c.seg + 1],
                   to_sec(c.rec->t_ns - knots[c.seg].t_ns));
        cached_t = c.rec->t_ns;
        cached_seg = c.seg;
      }
      const FactorBlocks f = lidar_plane_factor(
          *si, cfg_.extrinsics.lidar[c.rec->sensor], c.rec->value, c.fit);
      ne->add_binary(c.seg, f.J1, f.J2, f.r, wl);
      ++sum->lidar_used;
    }
  }

  const Eigen::MatrixXd wg =
      Eigen::MatrixXd::Identity(3, 3) /
      (cfg_.noise.gyro_sigma * cfg_.noise.gyro_sigma);
  const Eigen::MatrixXd wacc =
      Eigen::MatrixXd::Identity(3, 3) /
      (cfg_.noise.accel_sigma * cfg_.noise.accel_sigma);
  for (int k = 0; k < static_cast<int>(window_batches_.size()); ++k) {
    for (const auto &rec : window_batches_[k].gyro) {
      if (rec.saturated || rec.sensor >= layout_.num_gyros) continue;
      const SegmentInterp si(layout_, knots[k], knots[k + 1],
                             to_sec(rec.t_ns - knots[k].t_ns));
      const FactorBlocks f =
          gyro_factor(si, cfg_.extrinsics.gyro[rec.sensor], rec.sensor,
                      rec.value);
      ne->add_binary(k, f.J1, f.J2, f.r, wg);
      ++sum->gyro_used;
    }
    for (const auto &rec : window_batches_[k].accel) {
      if (rec.saturated || rec.sensor >= layout_.num_accels) continue;
      const SegmentInterp si(layout_, knots[k], knots[k + 1],
                             to_sec(rec.t_ns - knots[k].t_ns));
      const FactorBlocks f =
          accel_factor(si, cfg_.extrinsics.accel[rec.sensor], rec.sensor,
                       rec.value, gravity_);
      ne->add_binary(k, f.J1, f.J2, f.r, wacc);
      ++sum->accel_used;
    }
  }
}

/* -------------------------------------------------------------------------- */

SegmentSummary Estimator::process_segment(const MeasurementBatch &batch) {
  if (!initialized_)
    throw std::logic_error("Estimator: process_segment before initialize");
  SegmentSummary sum;
  sum.index = segment_index_++;
  sum.t0_ns = traj_.back_ns();
  sum.t1_ns = sum.t0_ns + traj_.spacing_ns();

  traj_.push_knot(traj_.propagate_knot(traj_.knots().back()));
  window_batches_.push_back(batch);
  for (const auto &r : batch.gyro)
    if (r.saturated) ++sum.saturated_skipped;
  for (const auto &r : batch.accel)
    if (r.saturated) ++sum.saturated_skipped;

  const std::vector<KnotState> prediction = traj_.knots();
  std::vector<Corr> corrs;
  bool diverged = false;
  double lambda = 0.0;
  int it = 0;
  for (; it < cfg_.max_iterations; ++it) {
    int gated = 0;
    associate(traj_.knots(), &corrs, &gated);
    NormalEquations ne;
    assemble(traj_.knots(), corrs, &ne, &sum);
    const double e0 = evaluate_energy(traj_.knots(), corrs);

    lambda = 0.0;
    bool accepted = false;
    bool saw_finite_trial = false;
    Eigen::VectorXd dx;
    std::vector<KnotState> trial;
    double e1 = e0;
    for (int attempt = 0; attempt <= cfg_.max_lambda_steps; ++attempt) {
      bool solved = true;
      try {
        dx = ne.solve(lambda);
      } catch (const std::runtime_error &) {
        solved = false;
      }
      if (solved && dx.allFinite() &&
          dx.lpNorm<Eigen::Infinity>() <= cfg_.divergence_step) {
        trial = traj_.knots();
        for (std::size_t k = 0; k < trial.size(); ++k)
          trial[k] = boxplus(trial[k], layout_,
                             dx.segment(k * layout_.dim, layout_.dim));
        e1 = evaluate_energy(trial, corrs);
        if (std::isfinite(e1)) {
          saw_finite_trial = true;
          if (e1 <= e0) {
            accepted = true;
            break;
          }
        }
      }
      lambda = (lambda == 0.0) ? cfg_.lambda_init
                               : lambda * cfg_.lambda_factor;
    }

    if (!accepted) {
      if (!saw_finite_trial) diverged = true;
      break;
    }
    traj_.knots() = trial;
    sum.step_norm = dx.lpNorm<Eigen::Infinity>();
    sum.energy = e1;
    sum.lambda = lambda;
    emit(json{{"seg", sum.index},
              {"iter", it},
              {"energy", e1},
              {"step", sum.step_norm},
              {"lambda", lambda},
              {"lidar", sum.lidar_used},
              {"gyro", sum.gyro_used},
              {"accel", sum.accel_used},
              {"gated", gated}}
             .dump());
    if (sum.step_norm < cfg_.step_tol) {
      sum.converged = true;
      ++it;
      break;
    }
  }
  sum.iterations = it;

  for (const auto &x : traj_.knots())
    if (!x.R.allFinite() || !x.p.allFinite()) diverged = true;
  if (diverged) {
    traj_.knots() = prediction;  // fall back to the motion-prior prediction
    sum.diverged = true;
    any_divergence_ = true;
    emit(json{{"event", "divergence"}, {"seg", sum.index}}.dump());
  }

  if (static_cast<int>(window_batches_.size()) > cfg_.window_segments)
    marginalize_front();
  return sum;
}

/* -------------------------------------------------------------------------- */

void Estimator::marginalize_front() {
  const int d = layout_.dim;
  const auto &knots = traj_.knots();
  const double dt = traj_.spacing();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * d);

  auto add2 = [&](const Eigen::MatrixXd &j1, const Eigen::MatrixXd &j2,
                  const Eigen::VectorXd &r, const Eigen::MatrixXd &w) {
    const Eigen::MatrixXd j1tw = j1.transpose() * w;
    const Eigen::MatrixXd j2tw = j2.transpose() * w;
    h.topLeftCorner(d, d) += j1tw * j1;
    h.bottomRightCorner(d, d) += j2tw * j2;
    h.topRightCorner(d, d) += j1tw * j2;
    h.bottomLeftCorner(d, d) += (j1tw * j2).transpose();
    g.head(d) += j1tw * r;
    g.tail(d) += j2tw * r;
  };

  // Prior carried on the leaving knot.
  const UnaryFactorBlocks af = anchor_factor(layout_, knots[0], marg_lin_);
  h.topLeftCorner(d, d) += af.J.transpose() * marg_H_ * af.J;
  g.head(d) += af.J.transpose() * (marg_H_ * af.r + marg_b_);

  // Motion prior linking it to its successor.
  {
    const FactorBlocks f = gp_prior_factor(layout_, knots[0], knots[1], dt);
    add2(f.J1, f.J2, f.r, gp_weight_);
  }

  // Measurements of the leaving segment, re-associated and linearized at the
  // converged values; these Jacobians stay frozen inside the marginal prior.
  const MeasurementBatch &batch = window_batches_.front();
  const Eigen::MatrixXd wl = Eigen::MatrixXd::Constant(
      1, 1, 1.0 / (cfg_.noise.lidar_sigma * cfg_.noise.lidar_sigma));
  const Eigen::MatrixXd wg =
      Eigen::MatrixXd::Identity(3, 3) /
      (cfg_.noise.gyro_sigma * cfg_.noise.gyro_sigma);
  const Eigen::MatrixXd wacc =
      Eigen::MatrixXd::Identity(3, 3) /
      (cfg_.noise.accel_sigma * cfg_.noise.accel_sigma);

  std::vector<Eigen::Vector3d> commit_pts;   // retiring sweep, refined states
  std::vector<Eigen::Vector3d> commit_orig;  // sensor origin per point
  commit_pts.reserve(batch.lidar.size());
  commit_orig.reserve(batch.lidar.size());
  int64_t cached_t = std::numeric_limits<int64_t>::min();
  std::optional<SegmentInterp> si;
  KnotState st;
  for (const auto &rec : batch.lidar) {
    if (rec.sensor >= cfg_.state.num_lidars) continue;
    if (rec.t_ns != cached_t) {
      st = interpolate_state(layout_, knots[0], knots[1], rec.t_ns);
      si.emplace(layout_, knots[0], knots[1],
                 to_sec(rec.t_ns - knots[0].t_ns));
      cached_t = rec.t_ns;
    }
    const Eigen::Isometry3d t_wl =
        st.pose() * cfg_.extrinsics.lidar[rec.sensor];
    const Eigen::Vector3d world = t_wl * rec.value;
    commit_pts.push_back(world);
    commit_orig.push_back(t_wl.translation());
    const PlaneFit fit = map_.fit_plane(world, t_wl.translation());
    if (!fit.valid) continue;
    const double dist = fit.normal.dot(world - fit.point);
    if (std::abs(dist) > cfg_.corr_max_dist) continue;
    const FactorBlocks f = lidar_plane_factor(
        *si, cfg_.extrinsics.lidar[rec.sensor], rec.value, fit);
    add2(f.J1, f.J2, f.r, wl);
  }
  std::vector<Eigen::Vector3d> to_map;
  to_map.reserve(commit_pts.size());
  for (std::size_t i = 0; i < commit_pts.size(); ++i) {
    const Eigen::Vector3d &w = commit_pts[i];
    const PlaneFit fit = map_.fit_plane(w, commit_orig[i]);
    if (!fit.valid) {
      to_map.push_back(w);  // new coverage
      continue;
    }
    const double dist = fit.normal.dot(w - fit.point);
    if (std::abs(dist) <= cfg_.insert_gate)
      to_map.push_back(w);  // confirms a known surface
  }
  for (const auto &rec : batch.gyro) {
    if (rec.saturated || rec.sensor >= layout_.num_gyros) continue;
    const SegmentInterp s2(layout_, knots[0], knots[1],
                           to_sec(rec.t_ns - knots[0].t_ns));
    const FactorBlocks f =
        gyro_factor(s2, cfg_.extrinsics.gyro[rec.sensor], rec.sensor,
                    rec.value);
    add2(f.J1, f.J2, f.r, wg);
  }
  for (const auto &rec : batch.accel) {
    if (rec.saturated || rec.sensor >= layout_.num_accels) continue;
    const SegmentInterp s2(layout_, knots[0], knots[1],
                           to_sec(rec.t_ns - knots[0].t_ns));
    const FactorBlocks f =
        accel_factor(s2, cfg_.extrinsics.accel[rec.sensor], rec.sensor,
                     rec.value, gravity_);
    add2(f.J1, f.J2, f.r, wacc);
  }

  const MarginalInfo m = schur_marginalize(h, g, d);
  if (m.clamped_eigenvalues > 0)
    emit(json{{"event", "psd_clamp"},
              {"seg_front", to_sec(knots[0].t_ns)},
              {"clamped", m.clamped_eigenvalues}}
             .dump());
  marg_lin_ = knots[1];
  marg_H_ = m.H;
  marg_b_ = m.b;
  marg_valid_ = true;

  archive_.push_back(knots[0]);
  map_.insert(to_map);
  traj_.pop_front(1);
  window_batches_.pop_front();

  if (++slides_since_cull_ >= cfg_.cull_every) {
    map_.cull(traj_.knots().front().p);
    slides_since_cull_ = 0;
  }
}

void Estimator::finish() {
  for (const auto &x : traj_.knots()) archive_.push_back(x);
  traj_.pop_front(traj_.size());
  window_batches_.clear();
}

/* -------------------------------------------------------------------------- */

KnotState Estimator::state_at(int64_t t_ns) const {
  auto chain_at = [&](std::size_t i) -> const KnotState & {
    return i < archive_.size() ? archive_[i]
                               : traj_.knots()[i - archive_.size()];
  };
  const std::size_t n = archive_.size() + traj_.size();
  if (n < 2) throw std::out_of_range("state_at: no trajectory");
  const int64_t front = chain_at(0).t_ns;
  const int64_t back = chain_at(n - 1).t_ns;
  if (t_ns < front || t_ns >= back)
    throw std::out_of_range("state_at: time outside estimate span");
  const std::size_t i = (t_ns - front) / cfg_.knot_spacing_ns;
  return interpolate_state(layout_, chain_at(i), chain_at(i + 1), t_ns);
}

std::vector<KnotState> Estimator::sample(int64_t step_ns) const {
  std::vector<KnotState> out;
  const std::size_t n = archive_.size() + traj_.size();
  if (n < 2) return out;
  const int64_t front = archive_.empty() ? traj_.front_ns() : archive_[0].t_ns;
  const int64_t back =
      traj_.size() ? traj_.back_ns() : archive_.back().t_ns;
  std::vector<int64_t> times;
  for (int64_t t = front; t < back; t += step_ns) times.push_back(t);
  for (int64_t t = front; t < back; t += cfg_.knot_spacing_ns)
    times.push_back(t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  out.reserve(times.size());
  for (int64_t t : times) out.push_back(state_at(t));
  return out;
}

/* -------------------------------------------------------------------------- */

RunOutcome run_offline(Estimator &est, const std::vector<Record> &records,
                       double init_span, int64_t knot_spacing_ns) {
  if (records.empty())
    throw std::runtime_error("run_offline: no records to process");
  RunOutcome out;
  const auto t_start = std::chrono::steady_clock::now();

  const int64_t t0 = records.front().t_ns;
  const int64_t init_end = t0 + to_ns(init_span);
  std::vector<Record> init_recs;
  std::vector<Record> rest;
  for (const auto &r : records)
    (r.t_ns < init_end ? init_recs : rest).push_back(r);
  out.init = est.initialize(init_recs, t0);

  if (!rest.empty()) {
    const int64_t t_max = rest.back().t_ns;
    const int nseg =
        static_cast<int>((t_max - init_end) / knot_spacing_ns) + 1;
    BucketedStreams buckets =
        bucket_measurements(rest, init_end, knot_spacing_ns, nseg);
    out.dropped_records = buckets.dropped;
    for (auto &batch : buckets.segments)
      out.segments.push_back(est.process_segment(batch));
  }
  est.finish();

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  out.exit_code = est.any_divergence() ? 4 : 0;
  return out;
}

}  // namespace gplio
