#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace gplio {

enum class SensorKind { kLidar, kGyro, kAccel };

// One sensor sample.  For lidar, value is the point in the sensor frame; for
// gyro/accel it is the measured rate / specific force in the sensor frame and
// saturated marks samples clipped at the sensor limit.
struct Record {
  SensorKind kind = SensorKind::kLidar;
  int sensor = 0;
  int64_t t_ns = 0;
  Eigen::Vector3d value = Eigen::Vector3d::Zero();
  bool saturated = false;
};

struct MeasurementBatch {
  std::vector<Record> lidar;
  std::vector<Record> gyro;
  std::vector<Record> accel;

  std::size_t size() const {
    return lidar.size() + gyro.size() + accel.size();
  }
};

struct BucketedStreams {
  int64_t t0_ns = 0;
  int64_t dt_ns = 0;
  std::vector<MeasurementBatch> segments;  // segment k covers [t0+k dt, t0+(k+1) dt)
  std::size_t dropped = 0;  // records before t0 or >= t0 + n*dt
};

// Distributes records into contiguous half-open segments.  Records outside
// the covered span are counted in dropped.
BucketedStreams bucket_measurements(const std::vector<Record> &records,
                                    int64_t t0_ns, int64_t dt_ns,
                                    int num_segments);

}  // namespace gplio
