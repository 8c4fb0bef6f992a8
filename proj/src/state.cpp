#include "gplio/state.hpp"

#include <stdexcept>

#include "gplio/so3.hpp"

namespace gplio {

void StateConfig::validate() const {
  if (num_lidars < 0 || num_gyros < 0 || num_accels < 0)
    throw std::invalid_argument("StateConfig: negative sensor count");
  if (num_lidars + num_gyros + num_accels == 0)
    throw std::invalid_argument("StateConfig: at least one sensor required");
  if ((rotation == RotationModel::kGyroAided) != (num_gyros > 0))
    throw std::invalid_argument(
        "StateConfig: gyro-aided rotation requires num_gyros > 0 and "
        "vice versa");
  if ((translation == TranslationModel::kAccelAided) != (num_accels > 0))
    throw std::invalid_argument(
        "StateConfig: accelerometer-aided translation requires num_accels > 0 "
        "and vice versa");
}

StateLayout StateLayout::make(const StateConfig &cfg) {
  cfg.validate();
  StateLayout l;
  int off = 0;
  l.rot = off;
  off += 3;
  switch (cfg.rotation) {
    case RotationModel::kRandomWalk:
      l.rotation_kind = PriorKind::kRandomWalk;
      break;
    case RotationModel::kConstantVelocity:
    case RotationModel::kGyroAided:
      l.rotation_kind = PriorKind::kConstantVelocity;
      l.omega = off;
      off += 3;
      break;
  }
  l.pos = off;
  off += 3;
  switch (cfg.translation) {
    case TranslationModel::kRandomWalk:
      l.translation_kind = PriorKind::kRandomWalk;
      break;
    case TranslationModel::kConstantVelocity:
      l.translation_kind = PriorKind::kConstantVelocity;
      l.vel = off;
      off += 3;
      break;
    case TranslationModel::kConstantAcceleration:
    case TranslationModel::kAccelAided:
      l.translation_kind = PriorKind::kConstantAcceleration;
      l.vel = off;
      off += 3;
      l.acc = off;
      off += 3;
      break;
  }
  if (cfg.rotation == RotationModel::kGyroAided) {
    l.gyro_bias0 = off;
    l.num_gyros = cfg.num_gyros;
    off += 3 * cfg.num_gyros;
  }
  if (cfg.translation == TranslationModel::kAccelAided) {
    l.accel_bias0 = off;
    l.num_accels = cfg.num_accels;
    off += 3 * cfg.num_accels;
  }
  l.dim = off;
  return l;
}

KnotState KnotState::zero(const StateLayout &layout, int64_t t_ns) {
  KnotState x;
  x.t_ns = t_ns;
  x.bg.assign(layout.num_gyros, Eigen::Vector3d::Zero());
  x.ba.assign(layout.num_accels, Eigen::Vector3d::Zero());
  return x;
}

Eigen::Isometry3d KnotState::pose() const {
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  T.linear() = R;
  T.translation() = p;
  return T;
}

KnotState boxplus(const KnotState &x, const StateLayout &layout,
                  const Eigen::VectorXd &delta) {
  if (delta.size() != layout.dim)
    throw std::invalid_argument("boxplus: increment size mismatch");
  KnotState out = x;
  out.R = x.R * so3::exp(delta.segment<3>(layout.rot));
  if (layout.has_omega()) out.omega += delta.segment<3>(layout.omega);
  out.p += delta.segment<3>(layout.pos);
  if (layout.has_vel()) out.v += delta.segment<3>(layout.vel);
  if (layout.has_acc()) out.a += delta.segment<3>(layout.acc);
  for (int i = 0; i < layout.num_gyros; ++i)
    out.bg[i] += delta.segment<3>(layout.gyro_bias(i));
  for (int i = 0; i < layout.num_accels; ++i)
    out.ba[i] += delta.segment<3>(layout.accel_bias(i));
  return out;
}

Eigen::VectorXd boxminus(const KnotState &x, const KnotState &base,
                         const StateLayout &layout) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(layout.dim);
  d.segment<3>(layout.rot) = so3::log(base.R.transpose() * x.R);
  if (layout.has_omega()) d.segment<3>(layout.omega) = x.omega - base.omega;
  d.segment<3>(layout.pos) = x.p - base.p;
  if (layout.has_vel()) d.segment<3>(layout.vel) = x.v - base.v;
  if (layout.has_acc()) d.segment<3>(layout.acc) = x.a - base.a;
  for (int i = 0; i < layout.num_gyros; ++i)
    d.segment<3>(layout.gyro_bias(i)) = x.bg[i] - base.bg[i];
  for (int i = 0; i < layout.num_accels; ++i)
    d.segment<3>(layout.accel_bias(i)) = x.ba[i] - base.ba[i];
  return d;
}

}  // namespace gplio
