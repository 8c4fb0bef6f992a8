#include "gplio/measurement.hpp"

#include <stdexcept>

namespace gplio {

BucketedStreams bucket_measurements(const std::vector<Record> &records,
                                    int64_t t0_ns, int64_t dt_ns,
                                    int num_segments) {
  if (dt_ns <= 0 || num_segments < 0)
    throw std::invalid_argument("bucket_measurements: bad span");
  BucketedStreams out;
  out.t0_ns = t0_ns;
  out.dt_ns = dt_ns;
  out.segments.resize(num_segments);
  const int64_t t_end = t0_ns + dt_ns * num_segments;
  for (const auto &rec : records) {
    if (rec.t_ns < t0_ns || rec.t_ns >= t_end) {
      ++out.dropped;
      continue;
    }
    auto &seg = out.segments[(rec.t_ns - t0_ns) / dt_ns];
    switch (rec.kind) {
      case SensorKind::kLidar: seg.lidar.push_back(rec); break;
      case SensorKind::kGyro: seg.gyro.push_back(rec); break;
      case SensorKind::kAccel: seg.accel.push_back(rec); break;
    }
  }
  return out;
}

}  // namespace gplio
