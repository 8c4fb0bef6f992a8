#pragma once

// Plain-text readers/writers for measurement streams and pose files.
//
// Measurement stream, one record per line:
//   lidar <sensor> <t_sec> <x> <y> <z>
//   gyro  <sensor> <t_sec> <wx> <wy> <wz> <saturated>
//   accel <sensor> <t_sec> <ax> <ay> <az> <saturated>
// Pose files use the TUM format: "t_sec px py pz qx qy qz qw".

#include <string>
#include <vector>

#include "gplio/measurement.hpp"
#include "gplio/sim.hpp"

namespace gplio {

// Parse failure (bad token, wrong field count, unknown tag). `line` is
// 1-based; carried in what().
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string &msg) : std::runtime_error(msg) {}
};

void write_records(const std::string &path, const std::vector<Record> &records);
std::vector<Record> read_records(const std::string &path);

// Poses are written with 9 significant digits and a canonical quaternion sign
// (w >= 0) so output is reproducible byte-for-byte.
void write_tum(const std::string &path, const std::vector<PoseSample> &poses);
std::vector<PoseSample> read_tum(const std::string &path);

}  // namespace gplio
