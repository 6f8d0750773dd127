#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hmp/bench.hpp"
#include "hmp/distance.hpp"
#include "hmp/errors.hpp"
#include "hmp/kinematics.hpp"
#include "hmp/simulator.hpp"
#include "oracles.hpp"

using namespace hmp;

namespace {

std::filesystem::path scenario_path(const std::string& name) {
  return std::filesystem::path(HMP_SOURCE_DIR) / "scenarios" / name;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trace_text(const RunTrace& t) {
  std::ostringstream out;
  write_trace(t, out);
  return out.str();
}

// Scenario A's database, built once per process.
const ConfigDatabase& scenario_db() {
  static DatabaseCache cache;
  static const Scenario sc = load_scenario(scenario_path("scenario_a.json"));
  static const RobotModel model = sc.resolve_model();
  return *cache.get(sc, model);
}

LoadErrorKind parse_kind(const std::string& text) {
  try {
    const auto sc = parse_scenario(text);
    sc.validate(sc.resolve_model());
  } catch (const LoadError& e) {
    return e.kind();
  }
  FAIL("scenario accepted");
  return LoadErrorKind::kIo;
}

}  // namespace

TEST_CASE("running stats against the two-pass formula") {
  std::mt19937_64 rng(3);
  std::lognormal_distribution<double> d(0.0, 1.0);
  for (int n : {2, 3, 10, 1000}) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(1e3 + d(rng));  // offset stresses cancellation
    const auto s = summarize(v);
    CHECK(s.count() == static_cast<std::size_t>(n));
    CHECK(s.mean() == doctest::Approx(oracle::two_pass_mean(v)).epsilon(1e-14));
    CHECK(s.stddev() == doctest::Approx(oracle::two_pass_stddev(v)).epsilon(1e-9));
  }
  CHECK(summarize({}).mean() == 0.0);
  CHECK(summarize({}).stddev() == 0.0);
  CHECK(summarize({4.0}).mean() == 4.0);
  CHECK(summarize({4.0}).stddev() == 0.0);
}

TEST_CASE("scenario files") {
  const auto m = ur5e_model();
  for (const auto* name : {"free_line.json", "scenario_a.json", "scenario_b.json"}) {
    const auto sc = load_scenario(scenario_path(name));
    CHECK_NOTHROW(sc.validate(m));
  }
  const auto blocked = list_scenarios(scenario_path("blocked"));
  REQUIRE(blocked.size() == 5);
  CHECK(blocked.front().filename() == "blocked_1.json");
  for (const auto& p : blocked) CHECK_NOTHROW(load_scenario(p).validate(m));
  CHECK_THROWS_AS(load_scenario(scenario_path("missing.json")), LoadError);
}

TEST_CASE("scenario validation") {
  const auto base = nlohmann::json::parse(read_text(scenario_path("scenario_a.json")));
  CHECK(parse_kind("{ not json") == LoadErrorKind::kMalformed);
  {
    auto doc = base;
    doc["schema_version"] = 7;
    CHECK(parse_kind(doc.dump()) == LoadErrorKind::kUnsupportedVersion);
  }
  {
    auto doc = base;
    doc.erase("goal_position");
    CHECK(parse_kind(doc.dump()) == LoadErrorKind::kMalformed);
  }
  {
    auto doc = base;
    doc["obstacle_script"].push_back(doc["obstacle_script"][0]);  // same time twice
    CHECK(parse_kind(doc.dump()) == LoadErrorKind::kMalformed);
  }
  {
    // obstacle sitting on the start pose
    auto doc = base;
    const auto sc = parse_scenario(base.dump());
    const Vec3 tip = end_effector_position(ur5e_model(), sc.start_config);
    doc["obstacle_script"][0]["boxes"] = nlohmann::json::array();
    doc["obstacle_script"][0]["boxes"].push_back(
        {{"center", {tip.x(), tip.y(), tip.z()}}, {"half_extents", {0.05, 0.05, 0.05}}});
    CHECK(parse_kind(doc.dump()) == LoadErrorKind::kMalformed);
  }
  {
    auto doc = base;
    doc["goal_position"] = {3.0, 0.0, 0.0};
    CHECK(parse_kind(doc.dump()) == LoadErrorKind::kMalformed);
  }
}

TEST_CASE("obstacle script interpolation") {
  auto doc = nlohmann::json::parse(read_text(scenario_path("free_line.json")));
  doc["obstacle_script"] = nlohmann::json::parse(R"([
    {"time": 0.0, "boxes": [{"center": [0.0, 0.0, 1.0], "half_extents": [0.1, 0.1, 0.1]}]},
    {"time": 1.0, "boxes": [{"center": [0.2, 0.0, 1.0], "half_extents": [0.1, 0.1, 0.1]}]},
    {"time": 2.0, "capsules": [{"p0": [0, 0, 1], "p1": [0, 0, 2], "radius": 0.05}]}
  ])");
  const auto sc = parse_scenario(doc.dump());
  CHECK(sc.obstacles_at(-1.0).boxes[0].center.x() == 0.0);
  CHECK(sc.obstacles_at(0.25).boxes[0].center.x() == doctest::Approx(0.05));
  CHECK(sc.obstacles_at(1.5).boxes.size() == 1);  // counts differ: earlier frame holds
  CHECK(sc.obstacles_at(1.5).boxes[0].center.x() == doctest::Approx(0.2));
  CHECK(sc.obstacles_at(9.0).capsules.size() == 1);
  CHECK(sc.obstacles_at(9.0).inflation == sc.obstacle_inflation);
}

TEST_CASE("free line: both methods reach the goal untouched") {
  const auto sc = load_scenario(scenario_path("free_line.json"));
  const auto m = sc.resolve_model();
  for (Method method : {Method::kHybrid, Method::kIkFollower}) {
    const auto r = run(sc, m, &scenario_db(), method, 0);
    CHECK(r.metrics.status == RunStatus::kGoalReached);
    CHECK(r.metrics.env_collisions == 0);
    CHECK(r.metrics.reconfig_events == 0);
    const Vec3 start = end_effector_position(m, sc.start_config);
    CHECK(r.metrics.path_length_m >= (sc.goal_position - start).norm() - 1e-9);
    const auto& last = r.trace.records.back();
    CHECK((last.position - sc.goal_position).norm() < 0.01);
  }
}

TEST_CASE("hybrid on scenario A") {
  const auto sc = load_scenario(scenario_path("scenario_a.json"));
  const auto m = sc.resolve_model();
  const auto r = run(sc, m, &scenario_db(), Method::kHybrid, 0);
  CHECK(r.trace.status == RunStatus::kGoalReached);
  CHECK(r.metrics.reconfig_events >= 1);
  CHECK(r.metrics.env_collisions == 0);

  // Every commanded pose keeps the safety distance.
  for (const auto& rec : r.trace.records) {
    if (rec.theta.size() == 0 || rec.event == EventKind::kBlocked) continue;
    const double d = arm_obstacle_distance(m, rec.theta, sc.obstacles_at(rec.time));
    CHECK(d == doctest::Approx(rec.min_distance).epsilon(1e-12));
    CHECK(d > sc.safety_distance);
  }

  // Waypoint errors recomputed from theta* alone.
  const auto report = waypoint_error_report(r.trace, m);
  CHECK(static_cast<int>(report.size()) == r.metrics.reconfig_events);
  for (const auto& e : report) {
    CHECK(e.error_m <= waypoint_error_bound(0.01));
    CHECK(e.error_m == doctest::Approx((e.achieved - e.target).norm()));
  }
  CHECK(waypoint_error_bound(0.01) == doctest::Approx(std::sqrt(3.0) / 2 * 0.01));

  // Same seed, same bytes.
  const auto again = run(sc, m, &scenario_db(), Method::kHybrid, 0);
  CHECK(trace_text(again.trace) == trace_text(r.trace));
}

TEST_CASE("trace layout") {
  const auto sc = load_scenario(scenario_path("free_line.json"));
  const auto r = run(sc, sc.resolve_model(), nullptr, Method::kIkFollower, 0);
  std::istringstream lines(trace_text(r.trace));
  std::string line;
  std::size_t n = 0;
  nlohmann::json last;
  while (std::getline(lines, line)) {
    last = nlohmann::json::parse(line);
    if (last["event"] != "end") {
      CHECK(last.contains("t"));
      CHECK(last.contains("theta"));
      CHECK_FALSE(last.contains("solve_ms"));
    }
    ++n;
  }
  CHECK(n == r.trace.records.size() + 1);
  CHECK(last["status"] == "goal_reached");
  CHECK(last["method"] == "ik_follower");
}

TEST_CASE("seeded start jitter") {
  const auto sc = load_scenario(scenario_path("blocked/blocked_1.json"));
  REQUIRE(sc.start_jitter > 0.0);
  const auto m = sc.resolve_model();
  const auto a = run(sc, m, nullptr, Method::kIkFollower, 1);
  const auto b = run(sc, m, nullptr, Method::kIkFollower, 1);
  const auto c = run(sc, m, nullptr, Method::kIkFollower, 2);
  CHECK(trace_text(a.trace) == trace_text(b.trace));
  CHECK(trace_text(a.trace) != trace_text(c.trace));
  const JointVector d = a.trace.records.front().theta - sc.start_config;
  CHECK(d.cwiseAbs().maxCoeff() <= sc.start_jitter);
}

TEST_CASE("hybrid without a database is an input error") {
  const auto sc = load_scenario(scenario_path("free_line.json"));
  CHECK_THROWS_AS(run(sc, sc.resolve_model(), nullptr, Method::kHybrid, 0), InputError);
}

TEST_CASE("method and enum names") {
  CHECK(parse_method("hybrid") == Method::kHybrid);
  CHECK(parse_method("ik_follower") == Method::kIkFollower);
  CHECK(parse_method("rrt_baseline") == Method::kRrtBaseline);
  CHECK_THROWS_AS(parse_method("nope"), InputError);
  CHECK(parse_hybrid_nominal("database") == HybridNominal::kDatabase);
  CHECK(parse_hybrid_nominal("ik") == HybridNominal::kIkStep);
  CHECK(std::string(to_string(RunStatus::kTimeLimit)) == "time_limit");
}

TEST_CASE("bench aggregation") {
  const auto sc = load_scenario(scenario_path("free_line.json"));
  const auto provider = [](const Scenario&, const RobotModel&) { return &scenario_db(); };
  const auto res = bench({sc}, {Method::kIkFollower, Method::kHybrid}, 3, 10, provider);
  REQUIRE(res.rows.size() == 6);
  REQUIRE(res.summary.size() == 2);
  CHECK(res.summary[0].method == Method::kIkFollower);
  CHECK(res.summary[1].method == Method::kHybrid);
  for (int i = 0; i < 6; ++i) {
    CHECK(res.rows[i].seed == 10u + static_cast<std::uint64_t>(res.rows[i].repetition));
  }
  for (const auto& s : res.summary) {
    CHECK(s.runs == 3);
    CHECK(s.goal_reached == 3);
    CHECK(s.joint_change_effort_rad.count() == 3);
    std::vector<double> efforts;
    std::size_t events = 0;
    for (const auto& row : res.rows) {
      if (row.method != s.method) continue;
      efforts.push_back(row.joint_change_effort_rad);
      events += row.solution_events;
    }
    CHECK(s.joint_change_effort_rad.mean() == doctest::Approx(oracle::two_pass_mean(efforts)));
    CHECK(s.solution_time_ms.count() == events);
  }
  std::ostringstream csv;
  write_bench_csv(res, csv);
  std::istringstream in(csv.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 7);
}
