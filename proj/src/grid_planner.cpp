#include "hmp/grid_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "hmp/distance.hpp"
#include "hmp/errors.hpp"

namespace hmp {

std::size_t GridSpec::cell_count() const {
  return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
         static_cast<std::size_t>(dims[2]);
}

void GridSpec::validate() const {
  if (!(cell_size > 0.0)) throw InputError("grid cell size must be > 0");
  for (int d : dims) {
    if (d < 1) throw InputError("grid dims must all be >= 1");
  }
}

OccupancyGrid::OccupancyGrid(GridSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  occupied_.assign(spec_.cell_count(), 0);
}

bool OccupancyGrid::in_bounds(const CellIndex& c) const {
  for (int k = 0; k < 3; ++k) {
    if (c[k] < 0 || c[k] >= spec_.dims[k]) return false;
  }
  return true;
}

std::size_t OccupancyGrid::linear(const CellIndex& c) const {
  return static_cast<std::size_t>(c[0]) +
         static_cast<std::size_t>(spec_.dims[0]) *
             (static_cast<std::size_t>(c[1]) +
              static_cast<std::size_t>(spec_.dims[1]) * static_cast<std::size_t>(c[2]));
}

CellIndex OccupancyGrid::unlinear(std::size_t index) const {
  const auto nx = static_cast<std::size_t>(spec_.dims[0]);
  const auto ny = static_cast<std::size_t>(spec_.dims[1]);
  return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
          static_cast<int>(index / (nx * ny))};
}

std::optional<CellIndex> OccupancyGrid::cell_of(const Vec3& p) const {
  CellIndex c;
  for (int k = 0; k < 3; ++k) {
    const double f = std::floor((p[k] - spec_.origin[k]) / spec_.cell_size);
    if (!(f >= 0.0) || f >= spec_.dims[k]) return std::nullopt;
    c[k] = static_cast<int>(f);
  }
  return c;
}

Vec3 OccupancyGrid::center(const CellIndex& c) const {
  return spec_.origin + spec_.cell_size * Vec3(c[0] + 0.5, c[1] + 0.5, c[2] + 0.5);
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupied_.begin(), occupied_.end(), 1));
}

namespace {

// Cell index range whose centers can lie within `reach` of the box [lo, hi].
void center_range(const OccupancyGrid& grid, const Vec3& lo, const Vec3& hi, double reach,
                  CellIndex& first, CellIndex& last) {
  const auto& spec = grid.spec();
  for (int k = 0; k < 3; ++k) {
    const double a = (lo[k] - reach - spec.origin[k]) / spec.cell_size - 0.5;
    const double b = (hi[k] + reach - spec.origin[k]) / spec.cell_size - 0.5;
    first[k] = std::max(0, static_cast<int>(std::floor(a)));
    last[k] = std::min(spec.dims[k] - 1, static_cast<int>(std::ceil(b)));
  }
}

template <typename DistanceFn>
void mark_cells(OccupancyGrid& grid, const Vec3& lo, const Vec3& hi, double threshold,
                DistanceFn distance) {
  CellIndex first;
  CellIndex last;
  center_range(grid, lo, hi, threshold, first, last);
  for (int z = first[2]; z <= last[2]; ++z) {
    for (int y = first[1]; y <= last[1]; ++y) {
      for (int x = first[0]; x <= last[0]; ++x) {
        const CellIndex c{x, y, z};
        if (grid.occupied(c)) continue;
        if (distance(grid.center(c)) <= threshold) grid.set_occupied(c);
      }
    }
  }
}

}  // namespace

OccupancyGrid rasterize(const ObstacleSet& obstacles, const GridSpec& spec) {
  validate(obstacles);
  OccupancyGrid grid(spec);
  const double half_diagonal = spec.cell_size * std::sqrt(3.0) / 2.0;
  const double threshold = obstacles.inflation + half_diagonal;
  for (const auto& cap : obstacles.capsules) {
    const Vec3 r = Vec3::Constant(cap.radius);
    mark_cells(grid, cap.p0.cwiseMin(cap.p1) - r, cap.p0.cwiseMax(cap.p1) + r, threshold,
               [&](const Vec3& p) { return point_segment_distance(p, cap.p0, cap.p1) - cap.radius; });
  }
  for (const auto& box : obstacles.boxes) {
    mark_cells(grid, box.lo(), box.hi(), threshold,
               [&](const Vec3& p) { return point_box_distance(p, box); });
  }
  return grid;
}

double StepCounts::cost(double cell_size) const {
  static const double kSqrt2 = std::sqrt(2.0);
  static const double kSqrt3 = std::sqrt(3.0);
  return cell_size * (static_cast<double>(axial) + static_cast<double>(face_diagonal) * kSqrt2 +
                      static_cast<double>(cube_diagonal) * kSqrt3);
}

StepCounts& StepCounts::operator+=(const StepCounts& other) {
  axial += other.axial;
  face_diagonal += other.face_diagonal;
  cube_diagonal += other.cube_diagonal;
  return *this;
}

StepCounts step_counts(const CellIndex& from, const CellIndex& to) {
  const int moved = (from[0] != to[0]) + (from[1] != to[1]) + (from[2] != to[2]);
  StepCounts s;
  if (moved == 1) s.axial = 1;
  if (moved == 2) s.face_diagonal = 1;
  if (moved == 3) s.cube_diagonal = 1;
  return s;
}

bool move_allowed(const OccupancyGrid& grid, const CellIndex& from, const CellIndex& to) {
  for (int k = 0; k < 3; ++k) {
    if (std::abs(to[k] - from[k]) > 1) return false;
  }
  for (int ex = 0; ex <= 1; ++ex) {
    for (int ey = 0; ey <= 1; ++ey) {
      for (int ez = 0; ez <= 1; ++ez) {
        const CellIndex c{ex ? to[0] : from[0], ey ? to[1] : from[1], ez ? to[2] : from[2]};
        if (!grid.in_bounds(c) || grid.occupied(c)) return false;
      }
    }
  }
  return true;
}

namespace {

struct OpenEntry {
  double f;
  double h;
  std::uint64_t seq;
  std::size_t node;
};

struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    return a.seq > b.seq;
  }
};

constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

}  // namespace

GridPath astar(const OccupancyGrid& grid, const CellIndex& start, const CellIndex& goal) {
  if (!grid.in_bounds(start) || !grid.in_bounds(goal)) {
    throw InputError("A* start or goal cell lies outside the grid");
  }
  if (grid.occupied(start)) throw InputError("A* start cell is occupied");
  if (grid.occupied(goal)) throw InputError("A* goal cell is occupied");

  const double cell = grid.spec().cell_size;
  const Vec3 goal_center = grid.center(goal);
  const auto heuristic = [&](const CellIndex& c) { return (grid.center(c) - goal_center).norm(); };

  const std::size_t n = grid.spec().cell_count();
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<StepCounts> counts(n);
  std::vector<std::size_t> parent(n, kNoParent);
  std::vector<std::uint8_t> closed(n, 0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
  std::uint64_t seq = 0;

  const std::size_t s = grid.linear(start);
  const std::size_t t = grid.linear(goal);
  g[s] = 0.0;
  const double h0 = heuristic(start);
  open.push({h0, h0, seq++, s});

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    const std::size_t u = top.node;
    if (closed[u]) continue;
    closed[u] = 1;
    if (u == t) break;
    const CellIndex cu = grid.unlinear(u);
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const CellIndex cv{cu[0] + dx, cu[1] + dy, cu[2] + dz};
          if (!move_allowed(grid, cu, cv)) continue;
          const std::size_t v = grid.linear(cv);
          if (closed[v]) continue;
          StepCounts next = counts[u];
          next += step_counts(cu, cv);
          const double gv = next.cost(cell);
          if (gv < g[v]) {
            g[v] = gv;
            counts[v] = next;
            parent[v] = u;
            const double hv = heuristic(cv);
            open.push({gv + hv, hv, seq++, v});
          }
        }
      }
    }
  }

  GridPath path;
  if (!closed[t]) return path;
  for (std::size_t v = t; v != kNoParent; v = parent[v]) path.nodes.push_back(grid.unlinear(v));
  std::reverse(path.nodes.begin(), path.nodes.end());
  path.steps = counts[t];
  path.cost = g[t];
  return path;
}

WaypointPath densify_polyline(const std::vector<Vec3>& points, double delta_l, double delta_u) {
  if (!(delta_u > 0.0) || delta_l < 0.0 || delta_l > delta_u) {
    throw ParameterError("waypoint bounds need 0 <= delta_l <= delta_u and delta_u > 0");
  }
  WaypointPath out;
  if (points.empty()) return out;
  out.waypoints.push_back(points.front());
  for (std::size_t i = 1; i < points.size(); ++i) {
    const Vec3& a = points[i - 1];
    const Vec3& b = points[i];
    const double length = (b - a).norm();
    if (length == 0.0) continue;
    const double pieces =
        std::max(1.0, std::ceil(length / delta_u * (1.0 - kSpacingTolerance)));
    const double piece = length / pieces;
    if (piece < delta_l * (1.0 - kSpacingTolerance)) {
      throw ParameterError("segment of length " + std::to_string(length) +
                           " cannot be split into pieces within [delta_l, delta_u]");
    }
    const int count = static_cast<int>(pieces);
    for (int k = 1; k < count; ++k) {
      out.waypoints.push_back(a + (b - a) * (static_cast<double>(k) / pieces));
    }
    out.waypoints.push_back(b);
  }
  return out;
}

WaypointPath densify(const GridPath& path, const OccupancyGrid& grid, double delta_l,
                     double delta_u) {
  std::vector<Vec3> centers;
  centers.reserve(path.nodes.size());
  for (const auto& c : path.nodes) centers.push_back(grid.center(c));
  return densify_polyline(centers, delta_l, delta_u);
}

void ReplanConfig::validate() const {
  if (gamma_steps < 1) throw InputError("gamma_steps must be >= 1");
  if (!(update_period > 0.0)) throw InputError("update_period must be > 0");
}

Replanner::Replanner(const Vec3& start, const Vec3& goal, PlannerParams params)
    : params_(std::move(params)), position_(start), goal_(goal) {
  params_.grid.validate();
  params_.replan.validate();
  if (params_.clearance < 0.0) throw InputError("planner clearance must be >= 0");
  const OccupancyGrid probe(params_.grid);
  if (!probe.cell_of(start)) throw InputError("start position lies outside the grid");
  if (!probe.cell_of(goal)) throw InputError("goal position lies outside the grid");
}

namespace {

bool plan_still_valid(const OccupancyGrid& grid, const std::vector<CellIndex>& plan,
                      StepCounts& steps) {
  steps = {};
  if (plan.empty()) return false;
  if (!grid.in_bounds(plan.front()) || grid.occupied(plan.front())) return false;
  for (std::size_t i = 1; i < plan.size(); ++i) {
    if (!move_allowed(grid, plan[i - 1], plan[i])) return false;
    steps += step_counts(plan[i - 1], plan[i]);
  }
  return true;
}

}  // namespace

Replanner::Cycle Replanner::step(const ObstacleSet& obstacles) {
  Cycle cycle;
  if (reached_) {
    cycle.status = ReplanStatus::kGoalReached;
    return cycle;
  }
  ObstacleSet planning = obstacles;
  planning.inflation += params_.clearance;
  const OccupancyGrid grid = rasterize(planning, params_.grid);

  const CellIndex start = *grid.cell_of(position_);
  const CellIndex goal = *grid.cell_of(goal_);
  if (grid.occupied(start) || grid.occupied(goal)) {
    cycle.status = ReplanStatus::kBlocked;
    return cycle;
  }

  const bool had_plan = !plan_.empty();
  StepCounts previous_steps;
  const bool previous_ok = had_plan && plan_.front() == start && plan_.back() == goal &&
                           plan_still_valid(grid, plan_, previous_steps);
  GridPath fresh = astar(grid, start, goal);
  if (fresh.empty()) {
    cycle.status = ReplanStatus::kBlocked;
    return cycle;
  }
  const double cell = params_.grid.cell_size;
  if (previous_ok && previous_steps.cost(cell) <= fresh.cost) {
    cycle.plan_cost = previous_steps.cost(cell);
  } else {
    cycle.replanned = had_plan;
    plan_ = std::move(fresh.nodes);
    cycle.plan_cost = fresh.cost;
  }

  // Polyline from the current position through the next gamma nodes. The very
  // first position need not be a node center; one closer than delta_l to its
  // center snaps onto it, which keeps every waypoint on a cell center or a
  // midpoint between centers.
  std::vector<Vec3> polyline;
  const Vec3 c0 = grid.center(plan_.front());
  if ((c0 - position_).norm() < params_.delta_l) {
    polyline.push_back(c0);
  } else {
    polyline.push_back(position_);
    polyline.push_back(c0);
  }
  const std::size_t advance =
      std::min<std::size_t>(static_cast<std::size_t>(params_.replan.gamma_steps), plan_.size() - 1);
  for (std::size_t i = 1; i <= advance; ++i) polyline.push_back(grid.center(plan_[i]));

  WaypointPath dense = densify_polyline(polyline, params_.delta_l, params_.delta_u);
  cycle.waypoints.assign(dense.waypoints.begin() + 1, dense.waypoints.end());
  if (!cycle.waypoints.empty()) position_ = cycle.waypoints.back();
  plan_.erase(plan_.begin(), plan_.begin() + static_cast<std::ptrdiff_t>(advance));
  if (plan_.size() == 1) {
    reached_ = true;
    cycle.status = ReplanStatus::kGoalReached;
  }
  return cycle;
}

std::vector<Vec3> ReplanTrace::global_path(const Vec3& start) const {
  std::vector<Vec3> out{start};
  for (const auto& c : cycles) out.insert(out.end(), c.executed.begin(), c.executed.end());
  return out;
}

ReplanTrace replan_loop(const Vec3& start, const Vec3& goal, const ObstacleStream& stream,
                        const PlannerParams& params, int max_cycles) {
  Replanner planner(start, goal, params);
  ReplanTrace trace;
  double time = 0.0;
  for (int i = 0; i < max_cycles; ++i) {
    const ObstacleSet obstacles = stream(time);
    Replanner::Cycle cycle = planner.step(obstacles);
    trace.status = cycle.status;
    if (cycle.status == ReplanStatus::kBlocked) break;
    trace.cycles.push_back({time, std::move(cycle.waypoints), cycle.replanned, cycle.plan_cost});
    if (cycle.status == ReplanStatus::kGoalReached) break;
    time += params.replan.update_period;
  }
  trace.last_position = planner.position();
  return trace;
}

double polyline_length(const std::vector<Vec3>& points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += (points[i] - points[i - 1]).norm();
  return total;
}

}  // namespace hmp
