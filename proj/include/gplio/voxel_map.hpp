#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

// Sparse voxel-hash map of registration points.  Each voxel keeps at most
// max_points_per_voxel points in insertion order; neighbor queries search the
// 7-voxel stencil (the query's voxel plus its six face-adjacent neighbors).

namespace gplio {

struct MapParams {
  double voxel_size = 0.5;            // edge length, meters
  int max_points_per_voxel = 20;
  double min_insert_spacing = 0.05;   // reject points closer than this
  double cull_radius = 100.0;         // drop voxels centered farther than this
  // Plane-validity gates for the 5-point local fit.
  double plane_max_thickness = 0.025;   // sqrt of smallest eigenvalue
  double plane_min_extent = 0.02;       // sqrt of middle eigenvalue
  double plane_max_point_dist = 0.08;   // max |n . (p - mean)|
};

struct PlaneFit {
  bool valid = false;
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  Eigen::Vector3d point = Eigen::Vector3d::Zero();  // centroid of the fit
};

// One stored point annotated with its insertion order and distance to the
// query, as returned by VoxelMap::knn_info.
struct NeighborPoint {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  uint64_t seq = 0;    // global insertion counter at the time it was stored
  double dist2 = 0.0;  // squared distance to the query point
};

// Plane through exactly the given neighbor set via principal-component
// analysis, subject to the eigenvalue and point-distance gates in params.
// The normal is oriented toward view_origin; when the viewing direction is
// degenerate the lexicographically non-negative normal is returned.  Invalid
// when fewer than 5 neighbors are given or a gate fails.
PlaneFit fit_plane_points(const std::vector<Eigen::Vector3d> &neighbors,
                          const Eigen::Vector3d &view_origin,
                          const MapParams &params);

class VoxelMap {
 public:
  explicit VoxelMap(const MapParams &params);

  // Inserts points subject to per-voxel capacity and minimum spacing;
  // returns the number actually stored.
  int insert(const std::vector<Eigen::Vector3d> &points);

  std::size_t size() const { return num_points_; }
  std::size_t num_voxels() const { return grid_.size(); }
  const MapParams &params() const { return params_; }

  // k nearest stored points within the stencil around q, ordered by distance
  // (ties broken by insertion order).  May return fewer than k.
  std::vector<Eigen::Vector3d> knn(const Eigen::Vector3d &q, int k) const;

  // Same search, annotated with each point's insertion sequence number and
  // squared distance to q, so callers can weigh how long a point has been
  // part of the map.
  std::vector<NeighborPoint> knn_info(const Eigen::Vector3d &q, int k) const;

  // Plane through the 5 nearest neighbors of q via principal-component
  // analysis.  The normal is oriented toward view_origin; when the viewing
  // direction is degenerate the lexicographically non-negative normal is
  // returned.  Invalid when fewer than 5 neighbors exist or the eigenvalue /
  // distance gates fail.
  PlaneFit fit_plane(const Eigen::Vector3d &q,
                     const Eigen::Vector3d &view_origin) const;

  // Removes voxels whose centers lie strictly farther than cull_radius from
  // center; returns the number of points dropped.
  std::size_t cull(const Eigen::Vector3d &center);

  // Order-independent digest of the stored points (for change detection).
  uint64_t content_hash() const;

  // ASCII PLY export of all stored points.
  void write_ply(const std::string &path) const;

  std::vector<Eigen::Vector3d> all_points() const;

 private:
  struct Key {
    int64_t x, y, z;
    bool operator==(const Key &o) const {
      return x == o.x && y == o.y && z == o.z;
    }
  };
  struct KeyHash {
    std::size_t operator()(const Key &k) const {
      // 64-bit prime-multiplier mix of the three coordinates.
      const uint64_t h = static_cast<uint64_t>(k.x) * 73856093ull ^
                         static_cast<uint64_t>(k.y) * 19349669ull ^
                         static_cast<uint64_t>(k.z) * 83492791ull;
      return static_cast<std::size_t>(h * 2654435761ull);
    }
  };
  struct StoredPoint {
    Eigen::Vector3d p;
    uint64_t seq;  // global insertion counter, used for distance ties
  };
  struct Voxel {
    std::vector<StoredPoint> points;
  };

  Key key_of(const Eigen::Vector3d &p) const;
  Eigen::Vector3d voxel_center(const Key &k) const;

  MapParams params_;
  std::unordered_map<Key, Voxel, KeyHash> grid_;
  std::size_t num_points_ = 0;
  uint64_t next_seq_ = 0;
};

}  // namespace gplio
