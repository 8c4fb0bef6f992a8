#include "gplio/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>

#include "gplio/trajectory.hpp"

namespace gplio {

namespace {

const char *kind_tag(SensorKind k) {
  switch (k) {
    case SensorKind::kLidar: return "lidar";
    case SensorKind::kGyro: return "gyro";
    case SensorKind::kAccel: return "accel";
  }
  throw std::logic_error("bad sensor kind");
}

double parse_double(const std::string &tok, int line) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception &) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + tok + "'");
  }
  if (pos != tok.size())
    throw ParseError("line " + std::to_string(line) + ": bad number '" + tok + "'");
  return v;
}

std::vector<std::string> tokens_of(const std::string &line) {
  std::istringstream iss(line);
  std::vector<std::string> toks;
  std::string t;
  while (iss >> t) toks.push_back(t);
  return toks;
}

void require_fields(const std::vector<std::string> &toks, std::size_t n,
                    int line) {
  if (toks.size() != n)
    throw ParseError("line " + std::to_string(line) + ": expected " +
                     std::to_string(n) + " fields, got " +
                     std::to_string(toks.size()));
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Fixed 9 decimals: nanosecond timestamps survive a write/read round trip.
std::string fmt_time(int64_t t_ns) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", to_sec(t_ns));
  return buf;
}

}  // namespace

void write_records(const std::string &path, const std::vector<Record> &records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto &r : records) {
    os << kind_tag(r.kind) << ' ' << r.sensor << ' ' << fmt_time(r.t_ns) << ' '
       << fmt9(r.value.x()) << ' ' << fmt9(r.value.y()) << ' '
       << fmt9(r.value.z());
    if (r.kind != SensorKind::kLidar) os << ' ' << (r.saturated ? 1 : 0);
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<Record> read_records(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<Record> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto toks = tokens_of(line);
    if (toks.empty()) continue;
    Record rec;
    if (toks[0] == "lidar") {
      require_fields(toks, 6, lineno);
      rec.kind = SensorKind::kLidar;
    } else if (toks[0] == "gyro" || toks[0] == "accel") {
      require_fields(toks, 7, lineno);
      rec.kind = toks[0] == "gyro" ? SensorKind::kGyro : SensorKind::kAccel;
    } else {
      throw ParseError("line " + std::to_string(lineno) + ": unknown tag '" +
                       toks[0] + "'");
    }
    const double sensor = parse_double(toks[1], lineno);
    if (sensor < 0 || sensor != std::floor(sensor))
      throw ParseError("line " + std::to_string(lineno) + ": bad sensor index");
    rec.sensor = static_cast<int>(sensor);
    rec.t_ns = to_ns(parse_double(toks[2], lineno));
    for (int i = 0; i < 3; ++i) rec.value[i] = parse_double(toks[3 + i], lineno);
    if (rec.kind != SensorKind::kLidar) {
      const double sat = parse_double(toks[6], lineno);
      if (sat != 0.0 && sat != 1.0)
        throw ParseError("line " + std::to_string(lineno) +
                         ": saturated flag must be 0 or 1");
      rec.saturated = sat != 0.0;
    }
    out.push_back(rec);
  }
  return out;
}

void write_tum(const std::string &path, const std::vector<PoseSample> &poses) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto &p : poses) {
    Eigen::Quaterniond q(p.pose.linear());
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    os << fmt9(to_sec(p.t_ns)) << ' ' << fmt9(p.pose.translation().x()) << ' '
       << fmt9(p.pose.translation().y()) << ' ' << fmt9(p.pose.translation().z())
       << ' ' << fmt9(q.x()) << ' ' << fmt9(q.y()) << ' ' << fmt9(q.z()) << ' '
       << fmt9(q.w()) << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<PoseSample> read_tum(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<PoseSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto toks = tokens_of(line);
    if (toks.empty()) continue;
    require_fields(toks, 8, lineno);
    PoseSample ps;
    ps.t_ns = to_ns(parse_double(toks[0], lineno));
    for (int i = 0; i < 3; ++i)
      ps.pose.translation()[i] = parse_double(toks[1 + i], lineno);
    Eigen::Quaterniond q(parse_double(toks[7], lineno),
                         parse_double(toks[4], lineno),
                         parse_double(toks[5], lineno),
                         parse_double(toks[6], lineno));
    if (std::abs(q.norm() - 1.0) > 1e-6)
      throw ParseError("line " + std::to_string(lineno) +
                       ": quaternion not normalized");
    ps.pose.linear() = q.normalized().toRotationMatrix();
    out.push_back(ps);
  }
  return out;
}

}  // namespace gplio
