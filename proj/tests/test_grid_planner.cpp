#include <doctest.h>

#include <cmath>
#include <random>

#include "hmp/errors.hpp"
#include "hmp/grid_planner.hpp"
#include "oracles.hpp"

using namespace hmp;

namespace {

GridSpec spec(int nx, int ny, int nz, double cell = 0.02) {
  GridSpec s;
  s.origin = Vec3::Zero();
  s.cell_size = cell;
  s.dims = {nx, ny, nz};
  return s;
}

bool path_is_valid(const OccupancyGrid& g, const GridPath& p) {
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    if (g.occupied(p.nodes[i])) return false;
    if (i > 0 && !move_allowed(g, p.nodes[i - 1], p.nodes[i])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rasterize: empty set leaves the grid free") {
  const auto g = rasterize(ObstacleSet{}, spec(10, 10, 10));
  CHECK(g.occupied_count() == 0);
}

TEST_CASE("rasterize: 3x1x1 box plus its shell") {
  const double c = 0.02;
  const auto s = spec(9, 7, 7, c);
  ObstacleSet obs;
  // Exactly cells x 3..5, y 3, z 3.
  obs.boxes.push_back({Vec3(4.5 * c, 3.5 * c, 3.5 * c), Vec3(1.5 * c, 0.5 * c, 0.5 * c)});
  const auto g = rasterize(obs, s);
  const double threshold = c * std::sqrt(3.0) / 2.0;
  int checked = 0;
  for (int x = 0; x < 9; ++x)
    for (int y = 0; y < 7; ++y)
      for (int z = 0; z < 7; ++z) {
        const Vec3 p = g.center({x, y, z});
        const Vec3 lo = obs.boxes[0].lo(), hi = obs.boxes[0].hi();
        double sq = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double d = std::max({lo[k] - p[k], 0.0, p[k] - hi[k]});
          sq += d * d;
        }
        const double d = std::sqrt(sq);
        if (std::abs(d - threshold) < 1e-12) continue;  // corner cells sit on the rule's edge
        CHECK(g.occupied({x, y, z}) == (d <= threshold));
        ++checked;
      }
  CHECK(checked > 9 * 7 * 7 - 20);
  for (int x = 3; x <= 5; ++x) CHECK(g.occupied({x, 3, 3}));
  // face and edge neighbours belong to the shell, two cells out does not
  CHECK(g.occupied({2, 3, 3}));
  CHECK(g.occupied({4, 4, 4}));
  CHECK_FALSE(g.occupied({1, 3, 3}));
  CHECK_FALSE(g.occupied({4, 5, 3}));
}

TEST_CASE("rasterize: adding an obstacle never frees a cell") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.4), r(0.01, 0.06);
  const auto s = spec(20, 20, 20);
  ObstacleSet obs;
  auto prev = rasterize(obs, s);
  for (int i = 0; i < 10; ++i) {
    if (i % 2) {
      obs.capsules.push_back({Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)), r(rng)});
    } else {
      obs.boxes.push_back({Vec3(u(rng), u(rng), u(rng)), Vec3(r(rng), r(rng), r(rng))});
    }
    const auto next = rasterize(obs, s);
    for (std::size_t k = 0; k < s.cell_count(); ++k) {
      const auto cidx = next.unlinear(k);
      if (prev.occupied(cidx)) CHECK(next.occupied(cidx));
    }
    prev = next;
  }
}

TEST_CASE("astar: straight corridor") {
  OccupancyGrid g(spec(5, 1, 1));
  const auto p = astar(g, {0, 0, 0}, {4, 0, 0});
  CHECK(p.nodes.size() == 5);
  CHECK(p.cost == doctest::Approx(4 * 0.02).epsilon(1e-15));
  CHECK(p.steps.axial == 4);
}

TEST_CASE("astar: wall with one gap matches Dijkstra") {
  OccupancyGrid g(spec(11, 11, 3));
  for (int y = 0; y < 11; ++y)
    for (int z = 0; z < 3; ++z)
      if (!(y == 9 && z == 1)) g.set_occupied({5, y, z});
  const auto p = astar(g, {1, 1, 1}, {9, 1, 1});
  const auto ref = oracle::dijkstra(g, {1, 1, 1}, {9, 1, 1});
  REQUIRE_FALSE(p.empty());
  CHECK(p.cost == ref.cost);
  CHECK(path_is_valid(g, p));
  bool through_gap = false;
  for (const auto& n : p.nodes) through_gap |= (n == CellIndex{5, 9, 1});
  CHECK(through_gap);
}

TEST_CASE("astar: walled-off goal gives no path") {
  OccupancyGrid g(spec(7, 7, 7));
  for (int x = 2; x <= 4; ++x)
    for (int y = 2; y <= 4; ++y)
      for (int z = 2; z <= 4; ++z)
        if (!(x == 3 && y == 3 && z == 3)) g.set_occupied({x, y, z});
  CHECK(astar(g, {0, 0, 0}, {3, 3, 3}).empty());
}

TEST_CASE("astar: occupied or outside endpoints are input errors") {
  OccupancyGrid g(spec(4, 4, 4));
  g.set_occupied({0, 0, 0});
  CHECK_THROWS_AS(astar(g, {0, 0, 0}, {3, 3, 3}), InputError);
  CHECK_THROWS_AS(astar(g, {1, 1, 1}, {0, 0, 0}), InputError);
  CHECK_THROWS_AS(astar(g, {1, 1, 1}, {4, 0, 0}), InputError);
}

TEST_CASE("astar: random grids against Dijkstra, heuristic admissible") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(3, 12);
  std::bernoulli_distribution fill(0.2);
  int solved = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto s = spec(dim(rng), dim(rng), dim(rng));
    OccupancyGrid g(s);
    for (std::size_t k = 0; k < s.cell_count(); ++k) g.set_occupied(g.unlinear(k), fill(rng));
    const CellIndex a{0, 0, 0}, b{s.dims[0] - 1, s.dims[1] - 1, s.dims[2] - 1};
    g.set_occupied(a, false);
    g.set_occupied(b, false);
    const auto p = astar(g, a, b);
    const auto ref = oracle::dijkstra(g, a, b);
    CHECK(p.empty() == (ref.cost < 0));
    if (p.empty()) continue;
    ++solved;
    CHECK(p.cost == ref.cost);
    CHECK(path_is_valid(g, p));
    // h never exceeds the true remaining cost (Dijkstra from the goal).
    const auto back = oracle::dijkstra(g, b, a);
    for (std::size_t k = 0; k < s.cell_count(); ++k) {
      if (std::isinf(back.dist[k])) continue;
      const double h = (g.center(g.unlinear(k)) - g.center(b)).norm();
      CHECK(h <= back.dist[k] + 1e-12);
    }
  }
  CHECK(solved > 10);
}

TEST_CASE("densify") {
  const double c = 0.02;
  SUBCASE("axial spacing already inside the bounds") {
    std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(c, 0, 0), Vec3(2 * c, 0, 0)};
    const auto w = densify_polyline(pts, 0.005, 0.02);
    REQUIRE(w.waypoints.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(w.waypoints[i] == pts[i]);
  }
  SUBCASE("cube diagonals split into ceil(length / delta_u) pieces") {
    std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(c, c, c), Vec3(2 * c, 2 * c, 2 * c)};
    const auto w = densify_polyline(pts, 0.005, 0.02);
    const int pieces = static_cast<int>(std::ceil(c * std::sqrt(3.0) / 0.02));  // 2
    CHECK(pieces == 2);
    REQUIRE(w.waypoints.size() == 1 + 2 * pieces);
    CHECK(w.waypoints.front() == pts.front());
    CHECK(w.waypoints.back() == pts.back());
    for (std::size_t i = 1; i < w.waypoints.size(); ++i) {
      const double step = (w.waypoints[i] - w.waypoints[i - 1]).norm();
      CHECK(step >= 0.005);
      CHECK(step <= 0.02 * (1 + kSpacingTolerance));
      CHECK(step == doctest::Approx(c * std::sqrt(3.0) / pieces));
    }
  }
  SUBCASE("infeasible lower bound") {
    std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(0.025, 0, 0)};
    CHECK_THROWS_AS(densify_polyline(pts, 0.015, 0.02), ParameterError);
  }
  SUBCASE("random grid paths keep every step inside the bounds") {
    std::mt19937_64 rng(8);
    std::bernoulli_distribution fill(0.15);
    OccupancyGrid g(spec(15, 15, 15));
    for (std::size_t k = 0; k < g.spec().cell_count(); ++k) g.set_occupied(g.unlinear(k), fill(rng));
    g.set_occupied({0, 0, 0}, false);
    g.set_occupied({14, 14, 14}, false);
    const auto p = astar(g, {0, 0, 0}, {14, 14, 14});
    REQUIRE_FALSE(p.empty());
    const auto w = densify(p, g, 0.005, 0.02);
    CHECK(w.waypoints.front() == g.center(p.nodes.front()));
    CHECK(w.waypoints.back() == g.center(p.nodes.back()));
    for (std::size_t i = 1; i < w.waypoints.size(); ++i) {
      const double step = (w.waypoints[i] - w.waypoints[i - 1]).norm();
      CHECK(step >= 0.005 * (1 - kSpacingTolerance));
      CHECK(step <= 0.02 * (1 + kSpacingTolerance));
    }
  }
}

TEST_CASE("replanner: static scene reduces to one-shot planning") {
  PlannerParams params;
  params.grid = spec(20, 20, 10);
  ObstacleSet obs;
  obs.boxes.push_back({Vec3(0.2, 0.2, 0.1), Vec3(0.03, 0.12, 0.2)});
  const OccupancyGrid g = rasterize(obs, params.grid);
  const CellIndex a{2, 3, 4}, b{17, 15, 4};
  const Vec3 start = g.center(a), goal = g.center(b);
  const auto trace = replan_loop(start, goal, [&](double) { return obs; }, params);
  REQUIRE(trace.status == ReplanStatus::kGoalReached);
  const auto global = trace.global_path(start);
  const auto one_shot = densify(astar(g, a, b), g, params.delta_l, params.delta_u);
  REQUIRE(global.size() == one_shot.waypoints.size());
  for (std::size_t i = 0; i < global.size(); ++i) {
    CHECK((global[i] - one_shot.waypoints[i]).norm() < 1e-12);
  }
  for (const auto& c : trace.cycles) CHECK_FALSE(c.replanned);
}

TEST_CASE("replanner: a wall that clears after two cycles shortens the route") {
  PlannerParams params;
  params.grid = spec(30, 30, 3);
  params.replan.gamma_steps = 1;
  const double c = params.grid.cell_size;
  ObstacleSet wall;
  // Wall across x = 15 with a gap only at the far y end.
  wall.boxes.push_back({Vec3(15.5 * c, 12.0 * c, 1.5 * c), Vec3(0.5 * c, 12.0 * c, 3.0 * c)});
  const OccupancyGrid g0(params.grid);
  const Vec3 start = g0.center({2, 5, 1}), goal = g0.center({27, 5, 1});
  const auto stream = [&](double t) { return t < 0.15 ? wall : ObstacleSet{}; };
  const auto trace = replan_loop(start, goal, stream, params);
  REQUIRE(trace.status == ReplanStatus::kGoalReached);
  const double detour = trace.cycles.front().plan_cost;
  CHECK(polyline_length(trace.global_path(start)) < detour);
  bool replanned = false;
  for (const auto& cyc : trace.cycles) replanned |= cyc.replanned;
  CHECK(replanned);
  // Waypoints never land in a cell occupied when they were planned.
  for (const auto& cyc : trace.cycles) {
    const auto grid = rasterize(stream(cyc.time), params.grid);
    for (const auto& w : cyc.executed) CHECK_FALSE(grid.occupied(*grid.cell_of(w)));
  }
}

TEST_CASE("replanner: sealed goal reports blocked") {
  PlannerParams params;
  params.grid = spec(12, 12, 12);
  const OccupancyGrid g0(params.grid);
  const Vec3 goal = g0.center({8, 8, 8});
  ObstacleSet shell;
  const double c = params.grid.cell_size;
  // Six slabs around the goal cell.
  const Vec3 gc = goal;
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {-1, 1}) {
      Vec3 center = gc;
      center[axis] += sign * 2.0 * c;
      Vec3 half = Vec3::Constant(2.5 * c);
      half[axis] = 0.5 * c;
      shell.boxes.push_back({center, half});
    }
  }
  const auto grid = rasterize(shell, params.grid);
  // Slab faces sit 1.5 cells from the goal center, so the goal cell stays free.
  REQUIRE_FALSE(grid.occupied({8, 8, 8}));
  const auto trace = replan_loop(g0.center({2, 2, 2}), goal, [&](double) { return shell; }, params);
  CHECK(trace.status == ReplanStatus::kBlocked);
  CHECK(trace.cycles.empty());
}
