#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hmp/config_db.hpp"
#include "hmp/robot_model.hpp"
#include "hmp/shapes.hpp"

namespace hmp {

/// sqrt(mean((a_i - b_i)^2)) over the first `joints` entries, raw angles (no
/// wrap-around). joints == 0 uses every entry. Throws InputError on a length
/// mismatch.
double rmse(const JointVector& a, const JointVector& b, std::size_t joints = 0);

struct ReconfigRequest {
  Vec3 x_k = Vec3::Zero();
  JointVector theta_k;
  ObstacleSet obstacles;
  double safety_distance = 0.05;

  void validate(const RobotModel& model) const;
};

enum class ReconfigStatus { kReconfigured, kUnchanged, kFailed };

const char* to_string(ReconfigStatus status);

/// Wall time of each phase, milliseconds.
struct ReconfigTiming {
  double lookup = 0.0;
  double rmse = 0.0;
  double rank = 0.0;
  double scan = 0.0;

  double total() const { return lookup + rmse + rank + scan; }
};

struct ReconfigResult {
  ReconfigStatus status = ReconfigStatus::kFailed;
  JointVector theta_star;  // empty when failed
  double rmse = 0.0;
  std::size_t candidates_checked = 0;
  std::size_t candidate_count = 0;
  ReconfigTiming timing;
};

/// Looks up the candidates of x_k's cell, ranks them by RMSE to theta_k
/// (ties by lattice order), and returns the first one that is not in collision
/// at the safety distance. kUnchanged when that candidate has zero RMSE.
ReconfigResult select(const ConfigDatabase& db, const ReconfigRequest& req,
                      const RobotModel& model);

/// Candidate of x's cell closest to theta by RMSE over the active joints, no
/// collision check. Same tie-break as select. Empty when the cell has none.
std::optional<JointVector> nearest_candidate(const ConfigDatabase& db, const Vec3& x,
                                             const JointVector& theta);

struct RrtParams {
  double step = 0.15;             // radians per extension
  double goal_bias = 0.1;
  double edge_resolution = 0.05;  // radians between edge collision checks
  double goal_tolerance = 0.01;   // meters, end-effector distance to goal
  double budget_seconds = 0.5;
  std::size_t max_iterations = 20000;
};

struct RrtResult {
  bool success = false;
  std::vector<JointVector> path;  // theta_start first
  std::size_t iterations = 0;
  std::size_t tree_size = 0;
};

/// Goal-biased RRT over the active joints. Goal samples extend the node whose
/// end effector is closest to x_goal by one damped least-squares step (capped
/// at `step`); other samples are uniform within the joint limits.
RrtResult fallback_rrt(const RobotModel& model, const JointVector& theta_start,
                       const Vec3& x_goal, const ObstacleSet& obstacles, double safety,
                       std::uint64_t seed, const RrtParams& params = {});

}  // namespace hmp
