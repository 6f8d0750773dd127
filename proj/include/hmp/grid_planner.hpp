#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hmp/shapes.hpp"

namespace hmp {

using CellIndex = std::array<int, 3>;

struct GridSpec {
  Vec3 origin = Vec3::Zero();  // corner of cell (0, 0, 0)
  double cell_size = 0.02;
  std::array<int, 3> dims = {50, 50, 50};

  std::size_t cell_count() const;
  void validate() const;
};

/// Workspace raster; a cell is occupied when the end-effector may not enter it.
class OccupancyGrid {
 public:
  explicit OccupancyGrid(GridSpec spec);

  const GridSpec& spec() const { return spec_; }
  bool in_bounds(const CellIndex& c) const;
  std::size_t linear(const CellIndex& c) const;
  CellIndex unlinear(std::size_t index) const;
  /// Floor binning; nullopt outside the grid.
  std::optional<CellIndex> cell_of(const Vec3& p) const;
  Vec3 center(const CellIndex& c) const;

  bool occupied(const CellIndex& c) const { return occupied_[linear(c)] != 0; }
  void set_occupied(const CellIndex& c, bool value = true) { occupied_[linear(c)] = value ? 1 : 0; }
  std::size_t occupied_count() const;

 private:
  GridSpec spec_;
  std::vector<std::uint8_t> occupied_;
};

/// Marks every cell whose center lies within inflation + cell_size*sqrt(3)/2 of
/// an obstacle primitive.
OccupancyGrid rasterize(const ObstacleSet& obstacles, const GridSpec& spec);

/// Number of axial, face-diagonal and cube-diagonal moves in a path. Costs are
/// always evaluated from these counts so equal paths give bit-equal costs.
struct StepCounts {
  long axial = 0;
  long face_diagonal = 0;
  long cube_diagonal = 0;

  double cost(double cell_size) const;
  StepCounts& operator+=(const StepCounts& other);
  bool operator==(const StepCounts&) const = default;
};

/// Counts for one move between two 26-neighbors.
StepCounts step_counts(const CellIndex& from, const CellIndex& to);

/// A move between 26-neighbors is allowed only if every cell of the move's
/// bounding block is free, so diagonals never cut past an occupied corner.
bool move_allowed(const OccupancyGrid& grid, const CellIndex& from, const CellIndex& to);

struct GridPath {
  std::vector<CellIndex> nodes;
  StepCounts steps;
  double cost = 0.0;  // meters

  bool empty() const { return nodes.empty(); }
};

/// A* over 26-connected free cells with Euclidean edge costs and heuristic.
/// Open-list ties: lower f, then lower h, then insertion order. An empty path
/// means no path exists; an occupied or out-of-grid endpoint is an InputError.
GridPath astar(const OccupancyGrid& grid, const CellIndex& start, const CellIndex& goal);

/// Relative slack used when comparing a waypoint spacing with its bounds.
inline constexpr double kSpacingTolerance = 1e-9;

struct WaypointPath {
  std::vector<Vec3> waypoints;
};

/// Splits each polyline segment into the fewest equal pieces no longer than
/// delta_u. Throws ParameterError if a piece would fall below delta_l.
WaypointPath densify_polyline(const std::vector<Vec3>& points, double delta_l, double delta_u);

/// densify_polyline over the node centers of a grid path.
WaypointPath densify(const GridPath& path, const OccupancyGrid& grid, double delta_l,
                     double delta_u);

struct ReplanConfig {
  int gamma_steps = 2;        // grid nodes executed per cycle
  double update_period = 0.1;  // seconds between map updates

  void validate() const;
};

struct PlannerParams {
  GridSpec grid;
  double delta_l = 0.005;
  double delta_u = 0.02;
  /// Extra obstacle growth used only for rasterization, keeping the tool clear.
  double clearance = 0.0;
  ReplanConfig replan;
};

enum class ReplanStatus { kAdvancing, kGoalReached, kBlocked };

/// Incremental local planner: each step() treats the current obstacle snapshot
/// as static, plans from the current node to the goal, keeps the previous plan
/// if it is still free and optimal, and executes gamma_steps nodes.
class Replanner {
 public:
  Replanner(const Vec3& start, const Vec3& goal, PlannerParams params);

  struct Cycle {
    ReplanStatus status = ReplanStatus::kAdvancing;
    std::vector<Vec3> waypoints;  // executed this cycle, current position excluded
    bool replanned = false;       // the map update changed the plan
    double plan_cost = 0.0;       // cost of the local plan used this cycle
  };

  Cycle step(const ObstacleSet& obstacles);

  const Vec3& position() const { return position_; }
  const Vec3& goal() const { return goal_; }
  bool reached_goal() const { return reached_; }
  const PlannerParams& params() const { return params_; }
  /// Remaining nodes of the current plan (current node first).
  const std::vector<CellIndex>& remaining_plan() const { return plan_; }

 private:
  PlannerParams params_;
  Vec3 position_;
  Vec3 goal_;
  std::vector<CellIndex> plan_;
  bool reached_ = false;
};

using ObstacleStream = std::function<ObstacleSet(double time)>;

struct ReplanTrace {
  struct Entry {
    double time = 0.0;
    std::vector<Vec3> executed;
    bool replanned = false;
    double plan_cost = 0.0;
  };
  ReplanStatus status = ReplanStatus::kAdvancing;
  std::vector<Entry> cycles;
  Vec3 last_position = Vec3::Zero();

  /// Start followed by every executed waypoint.
  std::vector<Vec3> global_path(const Vec3& start) const;
};

/// Runs Replanner cycles against the stream until the goal is reached, the
/// planner is blocked or max_cycles elapse.
ReplanTrace replan_loop(const Vec3& start, const Vec3& goal, const ObstacleStream& stream,
                        const PlannerParams& params, int max_cycles = 10000);

/// Sum of segment lengths.
double polyline_length(const std::vector<Vec3>& points);

}  // namespace hmp
