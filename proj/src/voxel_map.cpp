#include "gplio/voxel_map.hpp"

#include <algorithm>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gplio {

VoxelMap::VoxelMap(const MapParams &params) : params_(params) {
  if (params_.voxel_size <= 0.0 || params_.max_points_per_voxel <= 0)
    throw std::invalid_argument("VoxelMap: bad parameters");
}

VoxelMap::Key VoxelMap::key_of(const Eigen::Vector3d &p) const {
  const double s = params_.voxel_size;
  return {static_cast<int64_t>(std::floor(p.x() / s)),
          static_cast<int64_t>(std::floor(p.y() / s)),
          static_cast<int64_t>(std::floor(p.z() / s))};
}

Eigen::Vector3d VoxelMap::voxel_center(const Key &k) const {
  const double s = params_.voxel_size;
  return {(static_cast<double>(k.x) + 0.5) * s,
          (static_cast<double>(k.y) + 0.5) * s,
          (static_cast<double>(k.z) + 0.5) * s};
}

int VoxelMap::insert(const std::vector<Eigen::Vector3d> &points) {
  const double min_d2 =
      params_.min_insert_spacing * params_.min_insert_spacing;
  int stored = 0;
  for (const auto &p : points) {
    if (!p.allFinite()) continue;
    const Key k = key_of(p);
    Voxel &vox = grid_[k];
    if (static_cast<int>(vox.points.size()) >= params_.max_points_per_voxel)
      continue;
    // Spacing check over the stencil: the spacing is well below the voxel
    // size, so any conflicting point lives in this voxel or a face neighbor.
    bool too_close = false;
    static constexpr int64_t kOff[7][3] = {{0, 0, 0}, {1, 0, 0}, {-1, 0, 0},
                                           {0, 1, 0}, {0, -1, 0}, {0, 0, 1},
                                           {0, 0, -1}};
    for (const auto &o : kOff) {
      const auto it = grid_.find(Key{k.x + o[0], k.y + o[1], k.z + o[2]});
      if (it == grid_.end()) continue;
      for (const auto &sp : it->second.points) {
        if ((sp.p - p).squaredNorm() < min_d2) {
          too_close = true;
          break;
        }
      }
      if (too_close) break;
    }
    if (too_close) continue;
    vox.points.push_back({p, next_seq_++});
    ++num_points_;
    ++stored;
  }
  return stored;
}

std::vector<NeighborPoint> VoxelMap::knn_info(const Eigen::Vector3d &q,
                                              int k) const {
  std::vector<NeighborPoint> cands;
  cands.reserve(7 * params_.max_points_per_voxel);
  const Key kq = key_of(q);
  static constexpr int64_t kOff[7][3] = {{0, 0, 0}, {1, 0, 0}, {-1, 0, 0},
                                         {0, 1, 0}, {0, -1, 0}, {0, 0, 1},
                                         {0, 0, -1}};
  for (const auto &o : kOff) {
    const auto it = grid_.find(Key{kq.x + o[0], kq.y + o[1], kq.z + o[2]});
    if (it == grid_.end()) continue;
    for (const auto &sp : it->second.points)
      cands.push_back({sp.p, sp.seq, (sp.p - q).squaredNorm()});
  }
  const std::size_t n = std::min<std::size_t>(k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + n, cands.end(),
                    [](const NeighborPoint &a, const NeighborPoint &b) {
                      return a.dist2 != b.dist2 ? a.dist2 < b.dist2
                                                : a.seq < b.seq;
                    });
  cands.resize(n);
  return cands;
}

std::vector<Eigen::Vector3d> VoxelMap::knn(const Eigen::Vector3d &q,
                                           int k) const {
  const auto info = knn_info(q, k);
  std::vector<Eigen::Vector3d> out;
  out.reserve(info.size());
  for (const auto &c : info) out.push_back(c.p);
  return out;
}

PlaneFit fit_plane_points(const std::vector<Eigen::Vector3d> &neighbors,
                          const Eigen::Vector3d &view_origin,
                          const MapParams &params) {
  PlaneFit fit;
  if (neighbors.size() < 5) return fit;

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto &p : neighbors) mean += p;
  mean /= static_cast<double>(neighbors.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto &p : neighbors) {
    const Eigen::Vector3d d = p - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(neighbors.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d evals = es.eigenvalues();  // ascending
  Eigen::Vector3d n = es.eigenvectors().col(0);

  if (std::sqrt(std::max(evals[0], 0.0)) > params.plane_max_thickness)
    return fit;
  if (std::sqrt(std::max(evals[1], 0.0)) < params.plane_min_extent)
    return fit;
  for (const auto &p : neighbors)
    if (std::abs(n.dot(p - mean)) > params.plane_max_point_dist) return fit;

  const double toward = n.dot(view_origin - mean);
  if (std::abs(toward) > 1e-12) {
    if (toward < 0.0) n = -n;
  } else {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(n[i]) > 1e-12) {
        if (n[i] < 0.0) n = -n;
        break;
      }
    }
  }
  fit.valid = true;
  fit.normal = n;
  fit.point = mean;
  return fit;
}

PlaneFit VoxelMap::fit_plane(const Eigen::Vector3d &q,
                             const Eigen::Vector3d &view_origin) const {
  std::vector<Eigen::Vector3d> nb = knn(q, 5);
  static const double rr = [] {  // TEMP PROBE
    const char *e = std::getenv("GPLIO_NN_RADIUS");
    return e ? atof(e) : 0.0;
  }();
  if (rr > 0.0)
    nb.erase(std::remove_if(nb.begin(), nb.end(),
                            [&](const Eigen::Vector3d &p) {
                              return (p - q).norm() > rr;
                            }),
             nb.end());
  return fit_plane_points(nb, view_origin, params_);
}

std::size_t VoxelMap::cull(const Eigen::Vector3d &center) {
  const double r2 = params_.cull_radius * params_.cull_radius;
  std::size_t dropped = 0;
  for (auto it = grid_.begin(); it != grid_.end();) {
    if ((voxel_center(it->first) - center).squaredNorm() > r2) {
      dropped += it->second.points.size();
      it = grid_.erase(it);
    } else {
      ++it;
    }
  }
  num_points_ -= dropped;
  return dropped;
}

uint64_t VoxelMap::content_hash() const {
  // FNV-1a per point, XOR-combined so the digest is independent of traversal
  // order.
  uint64_t acc = 1469598103934665603ull ^ (num_points_ * 1099511628211ull);
  for (const auto &[key, vox] : grid_) {
    for (const auto &sp : vox.points) {
      uint64_t h = 1469598103934665603ull;
      for (int i = 0; i < 3; ++i) {
        uint64_t bits;
        const double v = sp.p[i];
        std::memcpy(&bits, &v, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
          h ^= (bits >> (8 * b)) & 0xff;
          h *= 1099511628211ull;
        }
      }
      acc ^= h;
    }
  }
  return acc;
}

std::vector<Eigen::Vector3d> VoxelMap::all_points() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(num_points_);
  for (const auto &[key, vox] : grid_)
    for (const auto &sp : vox.points) out.push_back(sp.p);
  return out;
}

void VoxelMap::write_ply(const std::string &path) const {
  std::FILE *f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_ply: cannot open " + path);
  // Deterministic order: sort by insertion sequence.
  std::vector<const StoredPoint *> pts;
  pts.reserve(num_points_);
  for (const auto &[key, vox] : grid_)
    for (const auto &sp : vox.points) pts.push_back(&sp);
  std::sort(pts.begin(), pts.end(),
            [](const StoredPoint *a, const StoredPoint *b) {
              return a->seq < b->seq;
            });
  std::fprintf(f,
               "ply\nformat ascii 1.0\nelement vertex %zu\n"
               "property double x\nproperty double y\nproperty double z\n"
               "end_header\n",
               pts.size());
  for (const auto *sp : pts)
    std::fprintf(f, "%.9g %.9g %.9g\n", sp->p.x(), sp->p.y(), sp->p.z());
  std::fclose(f);
}

}  // namespace gplio
