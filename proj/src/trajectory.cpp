#include "gplio/trajectory.hpp"

#include <stdexcept>

#include "gplio/so3.hpp"

namespace gplio {

Trajectory::Trajectory(const StateConfig &cfg, int64_t knot_spacing_ns)
    : cfg_(cfg), layout_(StateLayout::make(cfg)), spacing_ns_(knot_spacing_ns) {
  if (spacing_ns_ <= 0)
    throw std::invalid_argument("Trajectory: knot spacing must be > 0");
}

void Trajectory::reset(const KnotState &x0) {
  knots_.clear();
  knots_.push_back(x0);
}

void Trajectory::push_knot(const KnotState &x) {
  if (!knots_.empty() && x.t_ns != knots_.back().t_ns + spacing_ns_)
    throw std::invalid_argument("Trajectory: knot timestamp breaks spacing");
  knots_.push_back(x);
}

void Trajectory::pop_front(std::size_t n) {
  if (n > knots_.size())
    throw std::invalid_argument("Trajectory: pop_front past end");
  knots_.erase(knots_.begin(), knots_.begin() + n);
}

KnotState Trajectory::propagate_knot(const KnotState &x) const {
  const double dt = spacing();
  KnotState out = x;
  out.t_ns = x.t_ns + spacing_ns_;
  // Rotation: under the constant-velocity prior the mean advances along the
  // current rate; the rate is remapped through the right Jacobian because it
  // is the body rate of the new local chart.  Random walk keeps R.
  if (layout_.rotation_kind == PriorKind::kConstantVelocity) {
    const Eigen::Vector3d step = dt * x.omega;
    out.R = x.R * so3::exp(step);
    out.omega = so3::right_jacobian(step) * x.omega;
  }
  switch (layout_.translation_kind) {
    case PriorKind::kRandomWalk:
      break;
    case PriorKind::kConstantVelocity:
      out.p = x.p + dt * x.v;
      break;
    case PriorKind::kConstantAcceleration:
      out.p = x.p + dt * x.v + 0.5 * dt * dt * x.a;
      out.v = x.v + dt * x.a;
      break;
  }
  // Biases are random walks: unchanged.
  return out;
}

int Trajectory::segment_of(int64_t t_ns) const {
  if (knots_.size() < 2 || t_ns < front_ns() || t_ns >= back_ns())
    throw std::out_of_range("Trajectory: query time outside span");
  return static_cast<int>((t_ns - front_ns()) / spacing_ns_);
}

KnotState Trajectory::query(int64_t t_ns) const {
  const int seg = segment_of(t_ns);
  return interpolate_state(layout_, knots_[seg], knots_[seg + 1], t_ns);
}

KnotState interpolate_state(const StateLayout &layout, const KnotState &x1,
                            const KnotState &x2, int64_t t_ns) {
  const double dt = to_sec(x2.t_ns - x1.t_ns);
  const double tau = to_sec(t_ns - x1.t_ns);

  KnotState out = KnotState::zero(layout, t_ns);
  interp_rotation(layout.rotation_kind, dt, tau, x1.R, x1.omega, x2.R,
                  x2.omega, &out.R, layout.has_omega() ? &out.omega : nullptr);

  {
    const Eigen::MatrixXd lam =
        interp_lambda_scalar(layout.translation_kind, dt, tau);
    const Eigen::MatrixXd psi =
        interp_psi_scalar(layout.translation_kind, dt, tau);
    const int b = prior_blocks(layout.translation_kind);
    Eigen::Matrix<double, 3, Eigen::Dynamic> s1(3, b), s2(3, b);
    s1.col(0) = x1.p;
    s2.col(0) = x2.p;
    if (b > 1) { s1.col(1) = x1.v; s2.col(1) = x2.v; }
    if (b > 2) { s1.col(2) = x1.a; s2.col(2) = x2.a; }
    const Eigen::Matrix<double, 3, Eigen::Dynamic> r1 =
        s1 * lam.transpose() + s2 * psi.transpose();
    out.p = r1.col(0);
    if (layout.has_vel() && b > 1) out.v = r1.col(1);
    if (layout.has_acc() && b > 2) out.a = r1.col(2);
  }

  // Biases interpolate as random walks (piecewise linear between knots).
  const double alpha = tau / dt;
  for (int i = 0; i < layout.num_gyros; ++i)
    out.bg[i] = (1.0 - alpha) * x1.bg[i] + alpha * x2.bg[i];
  for (int i = 0; i < layout.num_accels; ++i)
    out.ba[i] = (1.0 - alpha) * x1.ba[i] + alpha * x2.ba[i];
  return out;
}

}  // namespace gplio
