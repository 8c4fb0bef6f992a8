#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gplio/gp_interp.hpp"
#include "gplio/state.hpp"

// Continuous-time trajectory over a uniformly spaced chain of knots.  Queries
// inside the half-open span [t_front, t_back) interpolate the active state
// blocks with the configured motion priors; knot times reproduce the stored
// knots exactly.  Timestamps are integer nanoseconds internally.

namespace gplio {

inline int64_t to_ns(double t_sec) {
  return static_cast<int64_t>(std::llround(t_sec * 1e9));
}
inline double to_sec(int64_t t_ns) { return 1e-9 * static_cast<double>(t_ns); }

// Interpolated state at t_ns within [x1.t_ns, x2.t_ns] under the layout's
// motion priors.
KnotState interpolate_state(const StateLayout &layout, const KnotState &x1,
                            const KnotState &x2, int64_t t_ns);

class Trajectory {
 public:
  Trajectory(const StateConfig &cfg, int64_t knot_spacing_ns);

  const StateLayout &layout() const { return layout_; }
  int64_t spacing_ns() const { return spacing_ns_; }
  double spacing() const { return to_sec(spacing_ns_); }

  void reset(const KnotState &x0);
  void push_knot(const KnotState &x);  // enforces exact spacing
  void pop_front(std::size_t n);
  std::size_t size() const { return knots_.size(); }
  const std::vector<KnotState> &knots() const { return knots_; }
  std::vector<KnotState> &knots() { return knots_; }
  KnotState &knot(std::size_t i) { return knots_[i]; }
  const KnotState &knot(std::size_t i) const { return knots_[i]; }

  int64_t front_ns() const { return knots_.front().t_ns; }
  int64_t back_ns() const { return knots_.back().t_ns; }
  bool covers(int64_t t_ns) const {
    return !knots_.empty() && t_ns >= front_ns() && t_ns < back_ns();
  }

  // Deterministic (zero-noise) propagation of a knot by one spacing.
  KnotState propagate_knot(const KnotState &x) const;

  // Index of the segment [t_k, t_k+1) containing t_ns; throws
  // std::out_of_range outside the span.
  int segment_of(int64_t t_ns) const;

  // Full interpolated state at t_ns (half-open span).
  KnotState query(int64_t t_ns) const;
  KnotState query(double t_sec) const { return query(to_ns(t_sec)); }

  Eigen::Isometry3d body_pose(int64_t t_ns) const { return query(t_ns).pose(); }
  Eigen::Isometry3d sensor_pose(int64_t t_ns,
                                const Eigen::Isometry3d &body_from_sensor) const {
    return body_pose(t_ns) * body_from_sensor;
  }

 private:
  StateConfig cfg_;
  StateLayout layout_;
  int64_t spacing_ns_;
  std::vector<KnotState> knots_;
};

}  // namespace gplio
