#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmp/config_db.hpp"
#include "hmp/grid_planner.hpp"
#include "hmp/robot_model.hpp"
#include "hmp/shapes.hpp"

namespace hmp {

inline constexpr int kScenarioSchemaVersion = 1;

/// Obstacle snapshot at one script time. Inflation comes from the scenario.
struct ObstacleKeyframe {
  double time = 0.0;
  std::vector<Capsule> capsules;
  std::vector<BoxObstacle> boxes;
};

/// Database the hybrid method builds when no file is given.
struct ScenarioDatabase {
  double eta_deg = 10.0;
  Vec3 workspace_lo = Vec3(0.0, -0.3, 0.0);
  Vec3 workspace_hi = Vec3(0.7, 0.7, 0.7);
  double cell_size = 0.01;
  double zeta = 0.01;

  DbBuildSpec build_spec(const RobotModel& model) const;
};

struct Scenario {
  std::string name;
  std::string description;
  std::string robot_model = "builtin:ur5e";
  std::filesystem::path base_dir;
  PlannerParams planner;
  JointVector start_config;
  Vec3 goal_position = Vec3::Zero();
  double safety_distance = 0.05;
  double obstacle_inflation = 0.02;
  double time_limit = 30.0;
  /// Half-width of the seeded uniform perturbation of the start joints, radians.
  double start_jitter = 0.0;
  std::vector<ObstacleKeyframe> obstacle_script;
  ScenarioDatabase database;

  /// Obstacles at time t. Primitives move linearly between keyframes with the
  /// same primitive counts; otherwise the earlier keyframe holds. Before the
  /// first keyframe and after the last the nearest one applies.
  ObstacleSet obstacles_at(double t) const;

  RobotModel resolve_model() const;

  /// Throws LoadError(kMalformed) when script times are not strictly
  /// increasing, the start is outside the grid or in collision at t = 0, or a
  /// field is out of range.
  void validate(const RobotModel& model) const;
};

Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Scenario files (*.json) of a directory in name order.
std::vector<std::filesystem::path> list_scenarios(const std::filesystem::path& dir);

}  // namespace hmp
