#include "gplio/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "gplio/so3.hpp"
#include "gplio/trajectory.hpp"

namespace gplio {

namespace {

// Wraps one YAML mapping; records which keys were consumed and rejects the
// rest in finish(), so every section is checked for typos.
class Section {
 public:
  Section(const YAML::Node &node, std::string path)
      : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ConfigError(path_ + ": expected a mapping");
  }

  YAML::Node get(const std::string &key) {
    seen_.insert(key);
    if (!node_ || node_.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
    return node_[key];
  }

  template <typename T>
  T value(const std::string &key, T fallback) {
    YAML::Node n = get(key);
    if (!n || n.IsNull()) return fallback;
    try {
      return n.as<T>();
    } catch (const YAML::Exception &) {
      throw ConfigError(path_ + "." + key + ": bad value");
    }
  }

  Eigen::Vector3d vec3(const std::string &key, const Eigen::Vector3d &fallback) {
    YAML::Node n = get(key);
    if (!n || n.IsNull()) return fallback;
    if (!n.IsSequence() || n.size() != 3)
      throw ConfigError(path_ + "." + key + ": expected a list of 3 numbers");
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) {
      try {
        v[i] = n[i].as<double>();
      } catch (const YAML::Exception &) {
        throw ConfigError(path_ + "." + key + ": bad number");
      }
    }
    return v;
  }

  void finish() {
    if (!node_ || node_.IsNull()) return;
    for (const auto &kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key))
        throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

  const std::string &path() const { return path_; }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

MotionConfig parse_motion(const YAML::Node &node) {
  Section s(node, "motion");
  MotionConfig m;
  m.kind = s.value<std::string>("kind", m.kind);
  m.t_start = s.value("t_start", m.t_start);
  m.t_ramp = s.value("t_ramp", m.t_ramp);
  m.velocity = s.vec3("velocity", m.velocity);
  m.spin_axis = s.vec3("spin_axis", m.spin_axis);
  m.spin_rate = s.value("spin_rate", m.spin_rate);
  m.amplitude = s.vec3("amplitude", m.amplitude);
  m.frequency = s.value("frequency", m.frequency);
  m.rot_amplitude = s.vec3("rot_amplitude", m.rot_amplitude);
  m.rot_frequency = s.vec3("rot_frequency", m.rot_frequency);
  m.waypoint_spacing = s.value("waypoint_spacing", m.waypoint_spacing);
  if (YAML::Node wps = s.get("waypoints"); wps && !wps.IsNull()) {
    if (!wps.IsSequence()) throw ConfigError("motion.waypoints: expected a list");
    for (std::size_t i = 0; i < wps.size(); ++i) {
      const YAML::Node &p = wps[i];
      if (!p.IsSequence() || p.size() != 3)
        throw ConfigError("motion.waypoints: each entry needs 3 numbers");
      m.waypoints.emplace_back(p[0].as<double>(), p[1].as<double>(),
                               p[2].as<double>());
    }
  }
  s.finish();
  return m;
}

std::vector<Patch> parse_world(const YAML::Node &node) {
  Section s(node, "world");
  const std::string preset = s.value<std::string>("preset", "corner_room");
  std::vector<Patch> patches;
  if (preset == "corner_room") {
    const double extent = s.value("extent", 40.0);
    const double distance = s.value("distance", 8.0);
    patches = PlaneWorld::corner_room(extent, distance).patches();
  } else if (preset == "patches") {
    YAML::Node list = s.get("patches");
    if (!list || !list.IsSequence() || list.size() == 0)
      throw ConfigError("world.patches: expected a non-empty list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section ps(list[i], "world.patches[" + std::to_string(i) + "]");
      Patch p;
      p.corner = ps.vec3("corner", Eigen::Vector3d::Zero());
      p.edge_u = ps.vec3("edge_u", Eigen::Vector3d::UnitX());
      p.edge_v = ps.vec3("edge_v", Eigen::Vector3d::UnitY());
      ps.finish();
      patches.push_back(p);
    }
  } else {
    throw ConfigError("world.preset: unknown preset '" + preset + "'");
  }
  // Allow both keys regardless of preset so dumping is symmetric.
  s.get("extent");
  s.get("distance");
  s.get("patches");
  s.finish();
  return patches;
}

Eigen::Isometry3d parse_pose(Section &s) {
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  pose.translation() = s.vec3("translation", Eigen::Vector3d::Zero());
  pose.linear() = so3::exp(s.vec3("rotation", Eigen::Vector3d::Zero()));
  return pose;
}

LidarSpec parse_lidar(const YAML::Node &node, int index) {
  Section s(node, "sensors.lidars[" + std::to_string(index) + "]");
  LidarSpec spec;
  spec.rate = s.value("rate", spec.rate);
  spec.rings = s.value("rings", spec.rings);
  spec.columns = s.value("columns", spec.columns);
  spec.elev_min_deg = s.value("elev_min_deg", spec.elev_min_deg);
  spec.elev_max_deg = s.value("elev_max_deg", spec.elev_max_deg);
  spec.azimuth_min_deg = s.value("azimuth_min_deg", spec.azimuth_min_deg);
  spec.azimuth_max_deg = s.value("azimuth_max_deg", spec.azimuth_max_deg);
  spec.min_range = s.value("min_range", spec.min_range);
  spec.max_range = s.value("max_range", spec.max_range);
  spec.sigma = s.value("sigma", spec.sigma);
  spec.extrinsic = parse_pose(s);
  s.finish();
  if (spec.rate <= 0 || spec.rings < 1 || spec.columns < 1)
    throw ConfigError(
        "sensors.lidars: rate, rings and columns must be positive");
  return spec;
}

ImuSpec parse_imu(const YAML::Node &node, const std::string &path) {
  Section s(node, path);
  ImuSpec spec;
  spec.rate = s.value("rate", spec.rate);
  spec.sigma = s.value("sigma", spec.sigma);
  spec.saturation = s.value("saturation", spec.saturation);
  spec.bias = s.vec3("bias", spec.bias);
  spec.extrinsic = so3::exp(s.vec3("rotation", Eigen::Vector3d::Zero()));
  s.finish();
  if (spec.rate <= 0) throw ConfigError(path + ": rate must be positive");
  return spec;
}

SensorKind parse_kind(const std::string &tag, const std::string &path) {
  if (tag == "lidar") return SensorKind::kLidar;
  if (tag == "gyro") return SensorKind::kGyro;
  if (tag == "accel") return SensorKind::kAccel;
  throw ConfigError(path + ": unknown sensor kind '" + tag + "'");
}

std::vector<FaultSpec> parse_faults(const YAML::Node &node) {
  std::vector<FaultSpec> out;
  if (!node || node.IsNull()) return out;
  if (!node.IsSequence()) throw ConfigError("faults: expected a list");
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string path = "faults[" + std::to_string(i) + "]";
    Section s(node[i], path);
    FaultSpec f;
    f.kind = parse_kind(s.value<std::string>("kind", "lidar"), path);
    f.sensor = s.value("sensor", 0);
    f.begin = s.value("begin", 0.0);
    f.end = s.value("end", 0.0);
    s.finish();
    if (f.end < f.begin) throw ConfigError(path + ": end before begin");
    out.push_back(f);
  }
  return out;
}

void parse_estimator(const YAML::Node &node, ScenarioConfig &cfg) {
  Section s(node, "estimator");
  cfg.rotation_model = s.value<std::string>("rotation", cfg.rotation_model);
  cfg.translation_model =
      s.value<std::string>("translation", cfg.translation_model);
  cfg.knot_spacing = s.value("knot_spacing", cfg.knot_spacing);
  cfg.window = s.value("window", cfg.window);
  cfg.init_span = s.value("init_span", cfg.init_span);
  cfg.qc_rotation = s.value("qc_rotation", cfg.qc_rotation);
  cfg.qc_translation = s.value("qc_translation", cfg.qc_translation);
  cfg.qc_gyro_bias = s.value("qc_gyro_bias", cfg.qc_gyro_bias);
  cfg.qc_accel_bias = s.value("qc_accel_bias", cfg.qc_accel_bias);
  cfg.noise.lidar_sigma = s.value("lidar_sigma", cfg.noise.lidar_sigma);
  cfg.noise.gyro_sigma = s.value("gyro_sigma", cfg.noise.gyro_sigma);
  cfg.noise.accel_sigma = s.value("accel_sigma", cfg.noise.accel_sigma);
  cfg.max_iterations = s.value("max_iterations", cfg.max_iterations);
  cfg.step_tol = s.value("step_tol", cfg.step_tol);
  cfg.corr_max_dist = s.value("corr_max_dist", cfg.corr_max_dist);
  cfg.insert_gate = s.value("insert_gate", cfg.insert_gate);
  if (YAML::Node an = s.get("anchor"); an && !an.IsNull()) {
    Section a(an, "estimator.anchor");
    cfg.anchor.rot = a.value("rotation", cfg.anchor.rot);
    cfg.anchor.omega = a.value("angular_rate", cfg.anchor.omega);
    cfg.anchor.pos = a.value("position", cfg.anchor.pos);
    cfg.anchor.vel = a.value("velocity", cfg.anchor.vel);
    cfg.anchor.acc = a.value("acceleration", cfg.anchor.acc);
    cfg.anchor.gyro_bias = a.value("gyro_bias", cfg.anchor.gyro_bias);
    cfg.anchor.accel_bias = a.value("accel_bias", cfg.anchor.accel_bias);
    a.finish();
  }
  s.finish();
  if (cfg.rotation_model != "random_walk" &&
      cfg.rotation_model != "constant_velocity" &&
      cfg.rotation_model != "gyro_aided")
    throw ConfigError("estimator.rotation: unknown model '" +
                      cfg.rotation_model + "'");
  if (cfg.translation_model != "random_walk" &&
      cfg.translation_model != "constant_velocity" &&
      cfg.translation_model != "constant_acceleration" &&
      cfg.translation_model != "accel_aided")
    throw ConfigError("estimator.translation: unknown model '" +
                      cfg.translation_model + "'");
  if (cfg.knot_spacing <= 0) throw ConfigError("estimator.knot_spacing: must be positive");
  if (cfg.window < 1) throw ConfigError("estimator.window: must be >= 1");
}

void parse_map(const YAML::Node &node, MapParams &map) {
  Section s(node, "map");
  map.voxel_size = s.value("voxel_size", map.voxel_size);
  map.max_points_per_voxel =
      s.value("max_points_per_voxel", map.max_points_per_voxel);
  map.min_insert_spacing = s.value("min_insert_spacing", map.min_insert_spacing);
  map.cull_radius = s.value("cull_radius", map.cull_radius);
  map.plane_max_thickness = s.value("plane_max_thickness", map.plane_max_thickness);
  map.plane_min_extent = s.value("plane_min_extent", map.plane_min_extent);
  map.plane_max_point_dist =
      s.value("plane_max_point_dist", map.plane_max_point_dist);
  s.finish();
  if (map.voxel_size <= 0) throw ConfigError("map.voxel_size: must be positive");
}

}  // namespace

ScenarioConfig parse_scenario(const std::string &yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception &e) {
    throw ConfigError(std::string("YAML parse error: ") + e.what());
  }
  Section s(root, "scenario");
  ScenarioConfig cfg;
  cfg.sim.seed = s.value<uint64_t>("seed", cfg.sim.seed);
  cfg.sim.duration = s.value("duration", cfg.sim.duration);
  cfg.sim.gravity = s.vec3("gravity", cfg.sim.gravity);
  cfg.sim.truth_rate = s.value("truth_rate", cfg.sim.truth_rate);
  cfg.sim.motion = parse_motion(s.get("motion"));
  cfg.sim.patches = parse_world(s.get("world"));
  if (YAML::Node sensors = s.get("sensors"); sensors && !sensors.IsNull()) {
    Section sec(sensors, "sensors");
    if (YAML::Node list = sec.get("lidars"); list && !list.IsNull()) {
      if (!list.IsSequence()) throw ConfigError("sensors.lidars: expected a list");
      for (std::size_t i = 0; i < list.size(); ++i)
        cfg.sim.lidars.push_back(parse_lidar(list[i], static_cast<int>(i)));
    }
    if (YAML::Node list = sec.get("gyros"); list && !list.IsNull()) {
      if (!list.IsSequence()) throw ConfigError("sensors.gyros: expected a list");
      for (std::size_t i = 0; i < list.size(); ++i)
        cfg.sim.gyros.push_back(
            parse_imu(list[i], "sensors.gyros[" + std::to_string(i) + "]"));
    }
    if (YAML::Node list = sec.get("accels"); list && !list.IsNull()) {
      if (!list.IsSequence()) throw ConfigError("sensors.accels: expected a list");
      for (std::size_t i = 0; i < list.size(); ++i)
        cfg.sim.accels.push_back(
            parse_imu(list[i], "sensors.accels[" + std::to_string(i) + "]"));
    }
    sec.finish();
  }
  cfg.sim.faults = parse_faults(s.get("faults"));
  parse_estimator(s.get("estimator"), cfg);
  if (YAML::Node m = s.get("map"); m && !m.IsNull()) parse_map(m, cfg.map);
  if (YAML::Node o = s.get("output"); o && !o.IsNull()) {
    Section os(o, "output");
    cfg.output.sample_period = os.value("sample_period", cfg.output.sample_period);
    os.finish();
    if (cfg.output.sample_period <= 0)
      throw ConfigError("output.sample_period: must be positive");
  }
  s.finish();
  if (cfg.sim.duration <= 0) throw ConfigError("duration: must be positive");
  if (cfg.sim.lidars.empty()) throw ConfigError("sensors.lidars: need at least one");
  return cfg;
}

ScenarioConfig load_scenario(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str());
}

EstimatorConfig ScenarioConfig::estimator() const {
  EstimatorConfig ec;
  StateConfig &st = ec.state;
  if (rotation_model == "random_walk")
    st.rotation = RotationModel::kRandomWalk;
  else if (rotation_model == "constant_velocity")
    st.rotation = RotationModel::kConstantVelocity;
  else if (rotation_model == "gyro_aided")
    st.rotation = RotationModel::kGyroAided;
  else
    throw ConfigError("estimator.rotation: unknown model '" + rotation_model + "'");
  if (translation_model == "random_walk")
    st.translation = TranslationModel::kRandomWalk;
  else if (translation_model == "constant_velocity")
    st.translation = TranslationModel::kConstantVelocity;
  else if (translation_model == "constant_acceleration")
    st.translation = TranslationModel::kConstantAcceleration;
  else if (translation_model == "accel_aided")
    st.translation = TranslationModel::kAccelAided;
  else
    throw ConfigError("estimator.translation: unknown model '" +
                      translation_model + "'");
  st.num_lidars = static_cast<int>(sim.lidars.size());
  st.num_gyros = static_cast<int>(sim.gyros.size());
  st.num_accels = static_cast<int>(sim.accels.size());
  try {
    st.validate();
  } catch (const std::exception &e) {
    throw ConfigError(std::string("estimator: ") + e.what());
  }

  for (const auto &l : sim.lidars) ec.extrinsics.lidar.push_back(l.extrinsic);
  for (const auto &g : sim.gyros) ec.extrinsics.gyro.push_back(g.extrinsic);
  for (const auto &a : sim.accels) ec.extrinsics.accel.push_back(a.extrinsic);

  ec.prior.rotation = st.rotation == RotationModel::kRandomWalk
                          ? PriorKind::kRandomWalk
                          : PriorKind::kConstantVelocity;
  switch (st.translation) {
    case TranslationModel::kRandomWalk:
      ec.prior.translation = PriorKind::kRandomWalk;
      break;
    case TranslationModel::kConstantVelocity:
      ec.prior.translation = PriorKind::kConstantVelocity;
      break;
    default:
      ec.prior.translation = PriorKind::kConstantAcceleration;
      break;
  }
  ec.prior.qc_rotation = qc_rotation * Eigen::Matrix3d::Identity();
  ec.prior.qc_translation = qc_translation * Eigen::Matrix3d::Identity();
  ec.prior.qc_gyro_bias = qc_gyro_bias * Eigen::Matrix3d::Identity();
  ec.prior.qc_accel_bias = qc_accel_bias * Eigen::Matrix3d::Identity();

  ec.noise = noise;
  ec.anchor = anchor;
  ec.map = map;
  ec.window_segments = window;
  ec.knot_spacing_ns = to_ns(knot_spacing);
  ec.init_span = init_span;
  ec.gravity_default = sim.gravity;
  ec.max_iterations = max_iterations;
  ec.step_tol = step_tol;
  ec.corr_max_dist = corr_max_dist;
  ec.insert_gate = insert_gate;
  return ec;
}

namespace {

YAML::Node vec3_node(const Eigen::Vector3d &v) {
  YAML::Node n(YAML::NodeType::Sequence);
  n.SetStyle(YAML::EmitterStyle::Flow);
  for (int i = 0; i < 3; ++i) n.push_back(v[i]);
  return n;
}

YAML::Node pose_node(const Eigen::Isometry3d &pose) {
  YAML::Node n;
  n["translation"] = vec3_node(pose.translation());
  n["rotation"] = vec3_node(so3::log(pose.linear()));
  return n;
}

const char *kind_tag_of(SensorKind k) {
  switch (k) {
    case SensorKind::kLidar: return "lidar";
    case SensorKind::kGyro: return "gyro";
    case SensorKind::kAccel: return "accel";
  }
  return "?";
}

}  // namespace

std::string dump_scenario(const ScenarioConfig &cfg) {
  YAML::Node root;
  root["seed"] = cfg.sim.seed;
  root["duration"] = cfg.sim.duration;
  root["gravity"] = vec3_node(cfg.sim.gravity);
  root["truth_rate"] = cfg.sim.truth_rate;

  YAML::Node world;
  world["preset"] = "patches";
  for (const auto &p : cfg.sim.patches) {
    YAML::Node pn;
    pn["corner"] = vec3_node(p.corner);
    pn["edge_u"] = vec3_node(p.edge_u);
    pn["edge_v"] = vec3_node(p.edge_v);
    world["patches"].push_back(pn);
  }
  root["world"] = world;

  YAML::Node motion;
  const MotionConfig &m = cfg.sim.motion;
  motion["kind"] = m.kind;
  motion["t_start"] = m.t_start;
  motion["t_ramp"] = m.t_ramp;
  motion["velocity"] = vec3_node(m.velocity);
  motion["spin_axis"] = vec3_node(m.spin_axis);
  motion["spin_rate"] = m.spin_rate;
  motion["amplitude"] = vec3_node(m.amplitude);
  motion["frequency"] = m.frequency;
  motion["rot_amplitude"] = vec3_node(m.rot_amplitude);
  motion["rot_frequency"] = vec3_node(m.rot_frequency);
  if (!m.waypoints.empty()) {
    for (const auto &w : m.waypoints) motion["waypoints"].push_back(vec3_node(w));
    motion["waypoint_spacing"] = m.waypoint_spacing;
  }
  root["motion"] = motion;

  YAML::Node sensors;
  for (const auto &l : cfg.sim.lidars) {
    YAML::Node n = pose_node(l.extrinsic);
    n["rate"] = l.rate;
    n["rings"] = l.rings;
    n["columns"] = l.columns;
    n["elev_min_deg"] = l.elev_min_deg;
    n["elev_max_deg"] = l.elev_max_deg;
    n["azimuth_min_deg"] = l.azimuth_min_deg;
    n["azimuth_max_deg"] = l.azimuth_max_deg;
    n["min_range"] = l.min_range;
    n["max_range"] = l.max_range;
    n["sigma"] = l.sigma;
    sensors["lidars"].push_back(n);
  }
  auto imu_node = [](const ImuSpec &s) {
    YAML::Node n;
    n["rate"] = s.rate;
    n["sigma"] = s.sigma;
    n["saturation"] = s.saturation;
    n["bias"] = vec3_node(s.bias);
    n["rotation"] = vec3_node(so3::log(s.extrinsic));
    return n;
  };
  for (const auto &g : cfg.sim.gyros) sensors["gyros"].push_back(imu_node(g));
  for (const auto &a : cfg.sim.accels) sensors["accels"].push_back(imu_node(a));
  root["sensors"] = sensors;

  if (!cfg.sim.faults.empty()) {
    for (const auto &f : cfg.sim.faults) {
      YAML::Node n;
      n["kind"] = kind_tag_of(f.kind);
      n["sensor"] = f.sensor;
      n["begin"] = f.begin;
      n["end"] = f.end;
      root["faults"].push_back(n);
    }
  }

  YAML::Node est;
  est["rotation"] = cfg.rotation_model;
  est["translation"] = cfg.translation_model;
  est["knot_spacing"] = cfg.knot_spacing;
  est["window"] = cfg.window;
  est["init_span"] = cfg.init_span;
  est["qc_rotation"] = cfg.qc_rotation;
  est["qc_translation"] = cfg.qc_translation;
  est["qc_gyro_bias"] = cfg.qc_gyro_bias;
  est["qc_accel_bias"] = cfg.qc_accel_bias;
  est["lidar_sigma"] = cfg.noise.lidar_sigma;
  est["gyro_sigma"] = cfg.noise.gyro_sigma;
  est["accel_sigma"] = cfg.noise.accel_sigma;
  est["max_iterations"] = cfg.max_iterations;
  est["step_tol"] = cfg.step_tol;
  est["corr_max_dist"] = cfg.corr_max_dist;
  est["insert_gate"] = cfg.insert_gate;
  YAML::Node an;
  an["rotation"] = cfg.anchor.rot;
  an["angular_rate"] = cfg.anchor.omega;
  an["position"] = cfg.anchor.pos;
  an["velocity"] = cfg.anchor.vel;
  an["acceleration"] = cfg.anchor.acc;
  an["gyro_bias"] = cfg.anchor.gyro_bias;
  an["accel_bias"] = cfg.anchor.accel_bias;
  est["anchor"] = an;
  root["estimator"] = est;

  YAML::Node map;
  map["voxel_size"] = cfg.map.voxel_size;
  map["max_points_per_voxel"] = cfg.map.max_points_per_voxel;
  map["min_insert_spacing"] = cfg.map.min_insert_spacing;
  map["cull_radius"] = cfg.map.cull_radius;
  map["plane_max_thickness"] = cfg.map.plane_max_thickness;
  map["plane_min_extent"] = cfg.map.plane_min_extent;
  map["plane_max_point_dist"] = cfg.map.plane_max_point_dist;
  root["map"] = map;

  YAML::Node out;
  out["sample_period"] = cfg.output.sample_period;
  root["output"] = out;

  YAML::Emitter em;
  em.SetDoublePrecision(17);
  em << root;
  return std::string(em.c_str()) + "\n";
}

void save_scenario(const std::string &path, const ScenarioConfig &cfg) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  os << dump_scenario(cfg);
  if (!os) throw ConfigError("write failed: " + path);
}

}  // namespace gplio
