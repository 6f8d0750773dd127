#include "hmp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "hmp/distance.hpp"
#include "hmp/errors.hpp"
#include "hmp/kinematics.hpp"

namespace hmp {
namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& what) {
  throw LoadError(LoadErrorKind::kMalformed, "scenario: " + what);
}

Vec3 vec3(const json& node) {
  if (!node.is_array() || node.size() != 3) malformed("expected a 3-vector");
  return Vec3(node[0].get<double>(), node[1].get<double>(), node[2].get<double>());
}

Capsule lerp(const Capsule& a, const Capsule& b, double s) {
  return {a.p0 + s * (b.p0 - a.p0), a.p1 + s * (b.p1 - a.p1),
          a.radius + s * (b.radius - a.radius)};
}

BoxObstacle lerp(const BoxObstacle& a, const BoxObstacle& b, double s) {
  return {a.center + s * (b.center - a.center),
          a.half_extents + s * (b.half_extents - a.half_extents)};
}

ObstacleKeyframe parse_keyframe(const json& node) {
  ObstacleKeyframe kf;
  kf.time = node.at("time").get<double>();
  for (const auto& c : node.value("capsules", json::array())) {
    kf.capsules.push_back({vec3(c.at("p0")), vec3(c.at("p1")), c.at("radius").get<double>()});
  }
  for (const auto& b : node.value("boxes", json::array())) {
    Vec3 half;
    if (b.contains("half_extents")) {
      half = vec3(b.at("half_extents"));
    } else {
      half = 0.5 * vec3(b.at("size"));
    }
    kf.boxes.push_back({vec3(b.at("center")), half});
  }
  return kf;
}

}  // namespace

DbBuildSpec ScenarioDatabase::build_spec(const RobotModel& model) const {
  return DbBuildSpec::for_model(model, eta_deg * std::numbers::pi / 180.0, workspace_lo,
                                workspace_hi, cell_size, zeta);
}

ObstacleSet Scenario::obstacles_at(double t) const {
  ObstacleSet out;
  out.inflation = obstacle_inflation;
  if (obstacle_script.empty()) return out;
  const auto& first = obstacle_script.front();
  const auto& last = obstacle_script.back();
  const ObstacleKeyframe* a = &first;
  const ObstacleKeyframe* b = nullptr;
  double s = 0.0;
  if (t >= last.time) {
    a = &last;
  } else if (t > first.time) {
    const auto it = std::upper_bound(
        obstacle_script.begin(), obstacle_script.end(), t,
        [](double v, const ObstacleKeyframe& kf) { return v < kf.time; });
    b = &*it;
    a = &*(it - 1);
    s = (t - a->time) / (b->time - a->time);
    if (a->capsules.size() != b->capsules.size() || a->boxes.size() != b->boxes.size()) {
      b = nullptr;
    }
  }
  if (b == nullptr) {
    out.capsules = a->capsules;
    out.boxes = a->boxes;
    return out;
  }
  for (std::size_t i = 0; i < a->capsules.size(); ++i) {
    out.capsules.push_back(lerp(a->capsules[i], b->capsules[i], s));
  }
  for (std::size_t i = 0; i < a->boxes.size(); ++i) {
    out.boxes.push_back(lerp(a->boxes[i], b->boxes[i], s));
  }
  return out;
}

RobotModel Scenario::resolve_model() const { return resolve_robot_model(robot_model, base_dir); }

void Scenario::validate(const RobotModel& model) const {
  try {
    planner.grid.validate();
    planner.replan.validate();
    hmp::validate(obstacles_at(0.0));
    for (const auto& kf : obstacle_script) {
      for (const auto& c : kf.capsules) hmp::validate(c);
      for (const auto& b : kf.boxes) hmp::validate(b);
    }
  } catch (const InputError& e) {
    malformed(e.what());
  }
  if (!(planner.delta_u > 0.0) || planner.delta_l < 0.0 || planner.delta_l > planner.delta_u) {
    malformed("waypoint bounds need 0 <= delta_l <= delta_u");
  }
  if (planner.clearance < 0.0) malformed("clearance must be >= 0");
  if (!(safety_distance >= 0.0)) malformed("safety_distance must be >= 0");
  if (!(time_limit > 0.0)) malformed("time_limit must be > 0");
  if (start_jitter < 0.0) malformed("start_jitter must be >= 0");
  for (std::size_t i = 1; i < obstacle_script.size(); ++i) {
    if (!(obstacle_script[i].time > obstacle_script[i - 1].time)) {
      malformed("obstacle_script times must be strictly increasing");
    }
  }
  if (static_cast<std::size_t>(start_config.size()) != model.dof()) {
    malformed("start_config has the wrong number of joints");
  }
  if (!model.within_limits(start_config)) malformed("start_config outside joint limits");
  const OccupancyGrid probe(planner.grid);
  if (!probe.cell_of(end_effector_position(model, start_config))) {
    malformed("start end-effector position lies outside the grid");
  }
  if (!probe.cell_of(goal_position)) malformed("goal position lies outside the grid");
  if (in_collision(model, start_config, obstacles_at(0.0), safety_distance)) {
    malformed("start_config is in collision at t = 0");
  }
}

Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  Scenario sc;
  sc.base_dir = base_dir;
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kScenarioSchemaVersion) {
      throw LoadError(LoadErrorKind::kUnsupportedVersion,
                      "scenario schema version " + std::to_string(version));
    }
    sc.name = doc.at("name").get<std::string>();
    sc.description = doc.value("description", std::string());
    sc.robot_model = doc.value("robot_model", std::string("builtin:ur5e"));

    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      sc.planner.grid.origin = vec3(g.at("origin"));
      sc.planner.grid.cell_size = g.at("cell_size").get<double>();
      const auto& dims = g.at("dims");
      for (int a = 0; a < 3; ++a) sc.planner.grid.dims[a] = dims.at(a).get<int>();
    }
    if (doc.contains("planner")) {
      const auto& p = doc.at("planner");
      sc.planner.delta_l = p.value("delta_l", sc.planner.delta_l);
      sc.planner.delta_u = p.value("delta_u", sc.planner.delta_u);
      sc.planner.clearance = p.value("clearance", sc.planner.clearance);
      sc.planner.replan.gamma_steps = p.value("gamma_steps", sc.planner.replan.gamma_steps);
      sc.planner.replan.update_period = p.value("update_period", sc.planner.replan.update_period);
    }
    const auto& start = doc.at("start_config");
    sc.start_config.resize(static_cast<Eigen::Index>(start.size()));
    for (std::size_t i = 0; i < start.size(); ++i) {
      sc.start_config[static_cast<Eigen::Index>(i)] = start[i].get<double>();
    }
    sc.goal_position = vec3(doc.at("goal_position"));
    sc.safety_distance = doc.value("safety_distance", sc.safety_distance);
    sc.obstacle_inflation = doc.value("obstacle_inflation", sc.obstacle_inflation);
    sc.time_limit = doc.value("time_limit", sc.time_limit);
    sc.start_jitter = doc.value("start_jitter", sc.start_jitter);
    for (const auto& kf : doc.value("obstacle_script", json::array())) {
      sc.obstacle_script.push_back(parse_keyframe(kf));
    }
    if (doc.contains("database")) {
      const auto& d = doc.at("database");
      sc.database.eta_deg = d.value("eta_deg", sc.database.eta_deg);
      if (d.contains("workspace_lo")) sc.database.workspace_lo = vec3(d.at("workspace_lo"));
      if (d.contains("workspace_hi")) sc.database.workspace_hi = vec3(d.at("workspace_hi"));
      sc.database.cell_size = d.value("cell_size", sc.database.cell_size);
      sc.database.zeta = d.value("zeta", sc.database.zeta);
    }
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadErrorKind::kIo, "cannot open scenario " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.parent_path());
}

std::vector<std::filesystem::path> list_scenarios(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) {
    throw LoadError(LoadErrorKind::kIo, "not a directory: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hmp
