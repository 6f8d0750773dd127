#include "hmp/simulator.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

#include <json.hpp>

#include "hmp/distance.hpp"
#include "hmp/errors.hpp"
#include "hmp/kinematics.hpp"

namespace hmp {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double mean_abs_change(const JointVector& a, const JointVector& b, Eigen::Index k) {
  return (a.head(k) - b.head(k)).cwiseAbs().sum() / static_cast<double>(k);
}

// Draws a perturbed start that is still valid; falls back to the nominal one.
JointVector jittered_start(const Scenario& sc, const RobotModel& model, std::uint64_t seed,
                           double safety) {
  if (sc.start_jitter <= 0.0) return sc.start_config;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-sc.start_jitter, sc.start_jitter);
  const OccupancyGrid probe(sc.planner.grid);
  const ObstacleSet obstacles = sc.obstacles_at(0.0);
  for (int attempt = 0; attempt < 16; ++attempt) {
    JointVector theta = sc.start_config;
    for (std::size_t j = 0; j < model.active_joint_count(); ++j) {
      theta[static_cast<Eigen::Index>(j)] += u(rng);
    }
    theta = model.clamp(theta);
    if (probe.cell_of(end_effector_position(model, theta)) &&
        !in_collision(model, theta, obstacles, safety)) {
      return theta;
    }
  }
  return sc.start_config;
}

class Runner {
 public:
  Runner(const Scenario& sc, const RobotModel& model, const ConfigDatabase* db, Method method,
         std::uint64_t seed, const RunOptions& options)
      : sc_(sc), model_(model), db_(db), method_(method), seed_(seed), options_(options),
        safety_(options.safety_distance.value_or(sc.safety_distance)),
        k_(static_cast<Eigen::Index>(model.active_joint_count())) {
    result_.trace.scenario = sc.name;
    result_.trace.method = method;
    result_.trace.seed = seed;
  }

  RunResult run() {
    theta_ = jittered_start(sc_, model_, seed_, safety_);
    position_ = end_effector_position(model_, theta_);
    command(0.0, theta_, position_, EventKind::kFollow, sc_.obstacles_at(0.0));
    if (method_ == Method::kRrtBaseline) {
      run_rrt_baseline();
    } else {
      run_closed_loop();
    }
    result_.trace.status = result_.metrics.status;
    return std::move(result_);
  }

 private:
  void run_closed_loop() {
    if (method_ == Method::kHybrid && db_ == nullptr) {
      throw InputError("the hybrid method needs a configuration database");
    }
    Replanner planner(position_, sc_.goal_position, sc_.planner);
    const double period = sc_.planner.replan.update_period;
    double t = 0.0;
    for (int cycle_index = 0; t < sc_.time_limit; ++cycle_index) {
      t = cycle_index * period;
      if (t >= sc_.time_limit) break;
      const ObstacleSet snapshot = sc_.obstacles_at(t);
      const Replanner::Cycle cycle = planner.step(snapshot);
      if (cycle.replanned) {
        TraceRecord rec;
        rec.time = t;
        rec.event = EventKind::kReplan;
        rec.plan_cost = cycle.plan_cost;
        rec.target = sc_.goal_position;
        result_.trace.records.push_back(rec);
        ++result_.metrics.replan_events;
      }
      if (cycle.status == ReplanStatus::kBlocked) {
        block(t, sc_.goal_position);
        return;
      }
      const std::size_t n = cycle.waypoints.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double tick = t + period * static_cast<double>(i + 1) / static_cast<double>(n);
        if (!advance(tick, cycle.waypoints[i])) return;
      }
      if (cycle.status == ReplanStatus::kGoalReached) {
        result_.metrics.status = RunStatus::kGoalReached;
        return;
      }
    }
    result_.metrics.status = RunStatus::kTimeLimit;
  }

  // One control tick toward waypoint x_k. False when the run is blocked.
  bool advance(double tick, const Vec3& x_k) {
    const ObstacleSet obstacles = sc_.obstacles_at(tick);
    auto t0 = Clock::now();
    std::optional<JointVector> nominal;
    if (method_ == Method::kHybrid && options_.nominal == HybridNominal::kDatabase) {
      nominal = nearest_candidate(*db_, x_k, theta_);
    }
    if (!nominal) {
      try {
        nominal = ik_step(model_, theta_, x_k);
      } catch (const SingularityError&) {
        nominal = theta_;
      }
    }
    const double ik_ms = ms_since(t0);

    if (method_ == Method::kIkFollower) {
      result_.metrics.solution_times_ms.push_back(ik_ms);
      command(tick, *nominal, x_k, EventKind::kFollow, obstacles, ik_ms);
      return true;
    }

    if (!in_collision(model_, *nominal, obstacles, safety_)) {
      command(tick, *nominal, x_k, EventKind::kFollow, obstacles, ik_ms);
      return true;
    }

    ReconfigRequest req;
    req.x_k = x_k;
    req.theta_k = *nominal;
    req.obstacles = obstacles;
    req.safety_distance = safety_;
    ReconfigResult res = select(*db_, req, model_);
    if (res.status != ReconfigStatus::kFailed) {
      result_.metrics.solution_times_ms.push_back(res.timing.total());
      ++result_.metrics.reconfig_events;
      const JointVector theta_star = res.theta_star;
      const double solve = res.timing.total();
      command(tick, theta_star, x_k, EventKind::kReconfig, obstacles, solve, std::move(res));
      const Vec3 achieved = end_effector_position(model_, theta_star);
      result_.metrics.waypoint_errors_m.push_back((achieved - x_k).norm());
      return true;
    }

    if (options_.fallback == Fallback::kRrt) {
      t0 = Clock::now();
      RrtParams params = options_.rrt;
      params.goal_tolerance = db_->build_spec().zeta;
      const std::uint64_t rrt_seed =
          seed_ ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(++fallback_draws_));
      const RrtResult path = fallback_rrt(model_, theta_, x_k, obstacles, safety_, rrt_seed, params);
      const double rrt_ms = ms_since(t0) + res.timing.total();
      if (path.success) {
        result_.metrics.solution_times_ms.push_back(rrt_ms);
        ++result_.metrics.fallback_events;
        for (std::size_t i = 1; i + 1 < path.path.size(); ++i) accumulate(path.path[i]);
        TraceRecord rec = make_record(tick, path.path.back(), x_k, EventKind::kFallback, obstacles);
        rec.fallback_nodes = path.path.size();
        rec.solve_ms = rrt_ms;
        rec.reconfig = std::move(res);
        commit(rec);
        return true;
      }
    }
    block(tick, x_k, std::move(res));
    return false;
  }

  void run_rrt_baseline() {
    const ObstacleSet obstacles = sc_.obstacles_at(0.0);
    const auto t0 = Clock::now();
    RrtParams params = options_.rrt;
    params.goal_tolerance = sc_.database.zeta;
    const RrtResult path =
        fallback_rrt(model_, theta_, sc_.goal_position, obstacles, safety_, seed_, params);
    const double ms = ms_since(t0);
    result_.metrics.solution_times_ms.push_back(ms);
    if (!path.success) {
      block(0.0, sc_.goal_position);
      return;
    }
    const double period = sc_.planner.replan.update_period;
    for (std::size_t i = 1; i < path.path.size(); ++i) {
      const double t = period * static_cast<double>(i);
      command(t, path.path[i], sc_.goal_position, EventKind::kFollow, sc_.obstacles_at(t),
              i == 1 ? ms : 0.0);
    }
    result_.metrics.status = RunStatus::kGoalReached;
  }

  TraceRecord make_record(double t, const JointVector& theta, const Vec3& target, EventKind event,
                          const ObstacleSet& obstacles) const {
    TraceRecord rec;
    rec.time = t;
    rec.event = event;
    rec.theta = theta;
    rec.position = end_effector_position(model_, theta);
    rec.target = target;
    rec.min_distance = arm_obstacle_distance(model_, theta, obstacles);
    return rec;
  }

  void command(double t, const JointVector& theta, const Vec3& target, EventKind event,
               const ObstacleSet& obstacles, double solve_ms = 0.0,
               std::optional<ReconfigResult> reconfig = std::nullopt) {
    TraceRecord rec = make_record(t, theta, target, event, obstacles);
    rec.solve_ms = solve_ms;
    rec.reconfig = std::move(reconfig);
    commit(rec);
  }

  // Applies a commanded configuration: effort, path length and penetration
  // bookkeeping, then the trace record.
  void commit(TraceRecord& rec) {
    accumulate(rec.theta);
    ObstacleSet raw = sc_.obstacles_at(rec.time);
    raw.inflation = 0.0;
    const bool penetrating = arm_obstacle_distance(model_, rec.theta, raw) <= 0.0;
    if (penetrating && !penetrating_) ++result_.metrics.env_collisions;
    penetrating_ = penetrating;
    result_.trace.records.push_back(std::move(rec));
  }

  void accumulate(const JointVector& theta) {
    if (!started_) {
      started_ = true;
      start_theta_ = theta;
    } else {
      result_.metrics.joint_travel_rad += mean_abs_change(theta, theta_, k_);
      result_.metrics.path_length_m += (end_effector_position(model_, theta) - position_).norm();
    }
    theta_ = theta;
    position_ = end_effector_position(model_, theta);
    result_.metrics.joint_change_effort_rad = mean_abs_change(theta_, start_theta_, k_);
  }

  void block(double t, const Vec3& target, std::optional<ReconfigResult> res = std::nullopt) {
    TraceRecord rec;
    rec.time = t;
    rec.event = EventKind::kBlocked;
    rec.theta = theta_;
    rec.position = position_;
    rec.target = target;
    rec.min_distance = arm_obstacle_distance(model_, theta_, sc_.obstacles_at(t));
    rec.reconfig = std::move(res);
    result_.trace.records.push_back(std::move(rec));
    result_.metrics.status = RunStatus::kBlocked;
  }

  const Scenario& sc_;
  const RobotModel& model_;
  const ConfigDatabase* db_;
  Method method_;
  std::uint64_t seed_;
  const RunOptions& options_;
  double safety_;
  Eigen::Index k_;
  JointVector theta_;
  JointVector start_theta_;
  Vec3 position_ = Vec3::Zero();
  bool started_ = false;
  bool penetrating_ = false;
  int fallback_draws_ = 0;
  RunResult result_;
};

nlohmann::ordered_json vec_json(const Eigen::VectorXd& v) {
  auto arr = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

const char* to_string(Method method) {
  switch (method) {
    case Method::kHybrid: return "hybrid";
    case Method::kIkFollower: return "ik_follower";
    case Method::kRrtBaseline: return "rrt_baseline";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  if (text == "hybrid") return Method::kHybrid;
  if (text == "ik_follower") return Method::kIkFollower;
  if (text == "rrt_baseline") return Method::kRrtBaseline;
  throw InputError("unknown method '" + text + "'");
}

const char* to_string(HybridNominal nominal) {
  return nominal == HybridNominal::kDatabase ? "database" : "ik";
}

HybridNominal parse_hybrid_nominal(const std::string& text) {
  if (text == "database") return HybridNominal::kDatabase;
  if (text == "ik") return HybridNominal::kIkStep;
  throw InputError("unknown hybrid nominal '" + text + "'");
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kFollow: return "follow";
    case EventKind::kReplan: return "replan";
    case EventKind::kReconfig: return "reconfig";
    case EventKind::kFallback: return "fallback";
    case EventKind::kBlocked: return "blocked";
  }
  return "unknown";
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kGoalReached: return "goal_reached";
    case RunStatus::kBlocked: return "blocked";
    case RunStatus::kTimeLimit: return "time_limit";
  }
  return "unknown";
}

RunResult run(const Scenario& scenario, const RobotModel& model, const ConfigDatabase* db,
              Method method, std::uint64_t seed, const RunOptions& options) {
  scenario.validate(model);
  return Runner(scenario, model, db, method, seed, options).run();
}

void write_trace(const RunTrace& trace, std::ostream& out, bool with_timings) {
  for (const auto& rec : trace.records) {
    nlohmann::ordered_json j;
    j["t"] = rec.time;
    j["event"] = to_string(rec.event);
    if (rec.event == EventKind::kReplan) {
      j["plan_cost"] = rec.plan_cost;
    } else {
      j["theta"] = vec_json(rec.theta);
      j["ee"] = vec_json(rec.position);
      j["target"] = vec_json(rec.target);
      // Infinite distance (no obstacles) serializes as null.
      j["min_distance"] = rec.min_distance;
    }
    if (rec.event == EventKind::kFallback) j["fallback_nodes"] = rec.fallback_nodes;
    if (rec.reconfig) {
      const auto& r = *rec.reconfig;
      nlohmann::ordered_json rj;
      rj["status"] = to_string(r.status);
      rj["rmse"] = r.rmse;
      rj["candidates_checked"] = r.candidates_checked;
      rj["candidate_count"] = r.candidate_count;
      if (r.status != ReconfigStatus::kFailed) rj["theta_star"] = vec_json(r.theta_star);
      if (with_timings) {
        rj["timing_ms"] = {{"lookup", r.timing.lookup},
                           {"rmse", r.timing.rmse},
                           {"rank", r.timing.rank},
                           {"scan", r.timing.scan}};
      }
      j["reconfig"] = std::move(rj);
    }
    if (with_timings && rec.solve_ms > 0.0) j["solve_ms"] = rec.solve_ms;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json end;
  end["event"] = "end";
  end["scenario"] = trace.scenario;
  end["method"] = to_string(trace.method);
  end["seed"] = trace.seed;
  end["status"] = to_string(trace.status);
  out << end.dump() << '\n';
}

std::vector<WaypointError> waypoint_error_report(const RunTrace& trace, const RobotModel& model) {
  std::vector<WaypointError> out;
  for (const auto& rec : trace.records) {
    if (rec.event != EventKind::kReconfig || !rec.reconfig) continue;
    WaypointError e;
    e.target = rec.target;
    e.achieved = end_effector_position(model, rec.reconfig->theta_star);
    e.error_m = (e.achieved - e.target).norm();
    out.push_back(e);
  }
  return out;
}

double waypoint_error_bound(double zeta) { return std::sqrt(3.0) / 2.0 * zeta; }

}  // namespace hmp
