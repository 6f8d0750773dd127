#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hmp/config_db.hpp"
#include "hmp/omrm.hpp"
#include "hmp/scenario.hpp"
#include "hmp/stats.hpp"

namespace hmp {

enum class Method { kHybrid, kIkFollower, kRrtBaseline };

const char* to_string(Method method);
/// Accepts "hybrid", "ik_follower", "rrt_baseline".
Method parse_method(const std::string& text);

enum class EventKind { kFollow, kReplan, kReconfig, kFallback, kBlocked };

const char* to_string(EventKind kind);

enum class RunStatus { kGoalReached, kBlocked, kTimeLimit };

const char* to_string(RunStatus status);

struct TraceRecord {
  double time = 0.0;
  EventKind event = EventKind::kFollow;
  JointVector theta;             // commanded configuration (empty for replan/blocked)
  Vec3 position = Vec3::Zero();  // F(theta)
  Vec3 target = Vec3::Zero();    // waypoint x_k
  double min_distance = 0.0;     // arm to obstacles, inflation included
  std::optional<ReconfigResult> reconfig;
  double plan_cost = 0.0;         // replan events
  std::size_t fallback_nodes = 0;  // fallback events
  double solve_ms = 0.0;          // wall time spent producing theta
};

struct RunTrace {
  std::string scenario;
  Method method = Method::kHybrid;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> records;
  RunStatus status = RunStatus::kBlocked;
};

struct Metrics {
  std::vector<double> solution_times_ms;  // one sample per solved waypoint event
  /// Mean over the active joints of |theta_final - theta_start|, radians.
  double joint_change_effort_rad = 0.0;
  /// Accumulated joint motion along the run, averaged over the active joints.
  double joint_travel_rad = 0.0;
  int env_collisions = 0;
  double path_length_m = 0.0;
  std::vector<double> waypoint_errors_m;
  int reconfig_events = 0;
  int replan_events = 0;
  int fallback_events = 0;
  RunStatus status = RunStatus::kBlocked;

  RunningStats solution_time() const { return summarize(solution_times_ms); }
};

enum class Fallback { kOff, kRrt };

/// Where the hybrid takes its per-waypoint configuration from before the
/// collision check. kIkStep advances the current configuration by one damped
/// least-squares step. kDatabase picks the waypoint cell's candidate nearest
/// (RMSE) to the current configuration, or the ik step when the cell is empty.
enum class HybridNominal { kDatabase, kIkStep };

const char* to_string(HybridNominal nominal);
/// Accepts "database", "ik".
HybridNominal parse_hybrid_nominal(const std::string& text);

struct RunOptions {
  Fallback fallback = Fallback::kOff;
  HybridNominal nominal = HybridNominal::kIkStep;
  /// Overrides the scenario's safety distance when set.
  std::optional<double> safety_distance;
  RrtParams rrt;
};

struct RunResult {
  RunTrace trace;
  Metrics metrics;
};

/// Closed-loop execution of one scenario. `db` is required for the hybrid
/// method and ignored otherwise.
RunResult run(const Scenario& scenario, const RobotModel& model, const ConfigDatabase* db,
              Method method, std::uint64_t seed, const RunOptions& options = {});

/// Writes the trace as JSON lines. Wall-clock fields are left out unless
/// with_timings is set, so equal seeds give byte-identical files.
void write_trace(const RunTrace& trace, std::ostream& out, bool with_timings = false);

struct WaypointError {
  Vec3 target;
  Vec3 achieved;
  double error_m = 0.0;
};

/// One entry per reconfiguration: ||F(theta*) - x_k||, recomputed from the trace.
std::vector<WaypointError> waypoint_error_report(const RunTrace& trace, const RobotModel& model);

/// Largest end-effector offset a reconfiguration can introduce when waypoints
/// sit on cell centers: half the cell diagonal.
double waypoint_error_bound(double zeta);

}  // namespace hmp
