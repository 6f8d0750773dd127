// Command line front end: plan, simulate, bench, db build|stats, ik.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hmp/bench.hpp"
#include "hmp/config_db.hpp"
#include "hmp/errors.hpp"
#include "hmp/grid_planner.hpp"
#include "hmp/kinematics.hpp"
#include "hmp/scenario.hpp"
#include "hmp/simulator.hpp"

namespace {

constexpr int kExitGoal = 0;
constexpr int kExitBlocked = 2;
constexpr int kExitInput = 3;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw hmp::InputError("not a number: '" + item + "'");
    }
  }
  return out;
}

hmp::Vec3 parse_vec3(const std::string& text) {
  const auto v = parse_list(text);
  if (v.size() == 1) return hmp::Vec3::Constant(v[0]);
  if (v.size() != 3) throw hmp::InputError("expected x,y,z: '" + text + "'");
  return hmp::Vec3(v[0], v[1], v[2]);
}

// "lo..hi", each side a scalar or x,y,z.
std::pair<hmp::Vec3, hmp::Vec3> parse_workspace(const std::string& text) {
  const auto sep = text.find("..");
  if (sep == std::string::npos) throw hmp::InputError("workspace must look like lo..hi");
  return {parse_vec3(text.substr(0, sep)), parse_vec3(text.substr(sep + 2))};
}

hmp::RunOptions run_options(const std::string& fallback, double safety,
                            const std::string& nominal) {
  hmp::RunOptions options;
  options.nominal = hmp::parse_hybrid_nominal(nominal);
  if (fallback == "rrt") {
    options.fallback = hmp::Fallback::kRrt;
  } else if (fallback != "off") {
    throw hmp::InputError("--fallback must be off or rrt");
  }
  if (safety >= 0.0) options.safety_distance = safety;
  return options;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << v;
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid task/configuration-space motion planner"};
  app.require_subcommand(1);

  // plan
  auto* plan = app.add_subcommand("plan", "one-shot A* + densify, CSV of waypoints");
  std::string plan_scenario, plan_out, plan_start, plan_goal;
  double plan_time = 0.0;
  plan->add_option("--scenario", plan_scenario, "scenario file")->required();
  plan->add_option("--out", plan_out, "CSV destination (default stdout)");
  plan->add_option("--start", plan_start, "override start position x,y,z");
  plan->add_option("--goal", plan_goal, "override goal position x,y,z");
  plan->add_option("--time", plan_time, "obstacle snapshot time");

  // simulate
  auto* sim = app.add_subcommand("simulate", "closed-loop run of one scenario");
  std::string sim_scenario, sim_method = "hybrid", sim_db, sim_trace, sim_fallback = "off",
              sim_nominal = "ik";
  std::uint64_t sim_seed = 0;
  double sim_safety = -1.0;
  bool sim_timings = false;
  sim->add_option("--scenario", sim_scenario, "scenario file")->required();
  sim->add_option("--method", sim_method, "hybrid | ik_follower | rrt_baseline");
  sim->add_option("--db", sim_db, "database file (built from the scenario if omitted)");
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--trace", sim_trace, "JSON lines trace destination");
  sim->add_option("--fallback", sim_fallback, "off | rrt");
  sim->add_option("--safety", sim_safety, "safety distance override, meters");
  sim->add_option("--nominal", sim_nominal, "hybrid per-waypoint configuration: ik | database");
  sim->add_flag("--with-timings", sim_timings, "include wall-clock fields in the trace");

  // bench
  auto* ben = app.add_subcommand("bench", "scenario x method x repetition comparison");
  std::string ben_dir, ben_methods = "hybrid,ik_follower", ben_out, ben_db, ben_fallback = "off",
              ben_nominal = "ik";
  int ben_reps = 10;
  std::uint64_t ben_seed = 0;
  double ben_safety = -1.0;
  ben->add_option("--scenarios", ben_dir, "directory of scenario files")->required();
  ben->add_option("--methods", ben_methods, "comma separated methods");
  ben->add_option("--reps", ben_reps, "repetitions per scenario and method");
  ben->add_option("--out", ben_out, "per-run CSV destination");
  ben->add_option("--seed", ben_seed, "base seed; repetition r uses seed + r");
  ben->add_option("--db", ben_db, "database file shared by every scenario");
  ben->add_option("--fallback", ben_fallback, "off | rrt");
  ben->add_option("--safety", ben_safety, "safety distance override, meters");
  ben->add_option("--nominal", ben_nominal, "hybrid per-waypoint configuration: ik | database");

  // db
  auto* db = app.add_subcommand("db", "configuration database");
  db->require_subcommand(1);
  auto* db_build = db->add_subcommand("build", "sweep the joint lattice and write a database");
  std::string build_model = "builtin:ur5e", build_ws = "0..0.7", build_out;
  double build_eta = 10.0, build_cell = 0.01, build_zeta = 0.01;
  unsigned build_threads = 0;
  unsigned long long build_budget = 10'000'000'000ULL;
  db_build->add_option("--model", build_model, "robot model file or builtin:ur5e");
  db_build->add_option("--eta", build_eta, "lattice spacing, degrees");
  db_build->add_option("--cell", build_cell, "cell size, meters");
  db_build->add_option("--zeta", build_zeta, "position tolerance, meters");
  db_build->add_option("--workspace", build_ws, "lo..hi, scalar or x,y,z per side");
  db_build->add_option("--out", build_out, "destination file")->required();
  db_build->add_option("--threads", build_threads, "worker threads (0 = all cores)");
  db_build->add_option("--budget", build_budget, "largest sweep accepted");
  auto* db_stats = db->add_subcommand("stats", "summary of a database file");
  std::string stats_file;
  db_stats->add_option("file", stats_file, "database file")->required();

  // ik
  auto* ik = app.add_subcommand("ik", "damped least-squares IK to a position");
  std::string ik_model = "builtin:ur5e", ik_target, ik_initial;
  int ik_iterations = 500;
  ik->add_option("--model", ik_model, "robot model file or builtin:ur5e");
  ik->add_option("--target", ik_target, "x,y,z")->required();
  ik->add_option("--initial", ik_initial, "initial joint vector, comma separated");
  ik->add_option("--iterations", ik_iterations, "maximum iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*plan) {
      const hmp::Scenario sc = hmp::load_scenario(plan_scenario);
      const hmp::RobotModel model = sc.resolve_model();
      hmp::Vec3 start = plan_start.empty() ? hmp::end_effector_position(model, sc.start_config)
                                           : parse_vec3(plan_start);
      const hmp::Vec3 goal = plan_goal.empty() ? sc.goal_position : parse_vec3(plan_goal);
      hmp::ObstacleSet obstacles = sc.obstacles_at(plan_time);
      obstacles.inflation += sc.planner.clearance;
      const hmp::OccupancyGrid grid = hmp::rasterize(obstacles, sc.planner.grid);
      const auto s = grid.cell_of(start);
      const auto g = grid.cell_of(goal);
      if (!s || !g) throw hmp::InputError("start or goal outside the grid");
      const hmp::GridPath path = hmp::astar(grid, *s, *g);
      if (path.empty()) {
        std::cerr << "no path\n";
        return kExitBlocked;
      }
      const hmp::WaypointPath dense =
          hmp::densify(path, grid, sc.planner.delta_l, sc.planner.delta_u);
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (!plan_out.empty()) {
        file.open(plan_out);
        if (!file) throw hmp::InputError("cannot write " + plan_out);
        out = &file;
      }
      *out << "index,x,y,z\n" << std::setprecision(17);
      for (std::size_t i = 0; i < dense.waypoints.size(); ++i) {
        const auto& p = dense.waypoints[i];
        *out << i << ',' << p.x() << ',' << p.y() << ',' << p.z() << '\n';
      }
      std::cerr << "nodes " << path.nodes.size() << ", cost " << fmt(path.cost) << " m, "
                << dense.waypoints.size() << " waypoints\n";
      return kExitGoal;
    }

    if (*sim) {
      const hmp::Scenario sc = hmp::load_scenario(sim_scenario);
      const hmp::RobotModel model = sc.resolve_model();
      const hmp::Method method = hmp::parse_method(sim_method);
      hmp::ConfigDatabase database;
      if (method == hmp::Method::kHybrid) {
        database = sim_db.empty() ? hmp::build_database(model, sc.database.build_spec(model))
                                  : hmp::load_database(std::filesystem::path(sim_db));
        if (database.model_fingerprint() != model.fingerprint()) {
          throw hmp::InputError("database was built for a different robot model");
        }
      }
      const hmp::RunResult result = hmp::run(sc, model, &database, method, sim_seed,
                                             run_options(sim_fallback, sim_safety, sim_nominal));
      if (!sim_trace.empty()) {
        std::ofstream out(sim_trace, std::ios::binary);
        if (!out) throw hmp::InputError("cannot write " + sim_trace);
        hmp::write_trace(result.trace, out, sim_timings);
      }
      const auto& m = result.metrics;
      const auto t = m.solution_time();
      double worst = 0.0;
      for (double e : m.waypoint_errors_m) worst = std::max(worst, e);
      std::cout << "scenario        " << sc.name << '\n'
                << "method          " << hmp::to_string(method) << '\n'
                << "status          " << hmp::to_string(m.status) << '\n'
                << "solution_ms     " << fmt(t.mean(), 3) << " +/- " << fmt(t.stddev(), 3)
                << " (" << t.count() << " events)\n"
                << "effort_rad      " << fmt(m.joint_change_effort_rad) << '\n'
                << "travel_rad      " << fmt(m.joint_travel_rad) << '\n'
                << "env_collisions  " << m.env_collisions << '\n'
                << "reconfigs       " << m.reconfig_events << '\n'
                << "replans         " << m.replan_events << '\n'
                << "fallbacks       " << m.fallback_events << '\n'
                << "path_length_m   " << fmt(m.path_length_m) << '\n'
                << "max_wp_error_m  " << fmt(worst, 5) << '\n';
      return m.status == hmp::RunStatus::kGoalReached ? kExitGoal : kExitBlocked;
    }

    if (*ben) {
      std::vector<hmp::Scenario> scenarios;
      for (const auto& p : hmp::list_scenarios(ben_dir)) scenarios.push_back(hmp::load_scenario(p));
      if (scenarios.empty()) throw hmp::InputError("no scenarios in " + ben_dir);
      std::vector<hmp::Method> methods;
      std::stringstream ss(ben_methods);
      std::string item;
      while (std::getline(ss, item, ',')) methods.push_back(hmp::parse_method(item));
      hmp::DatabaseCache cache;
      hmp::ConfigDatabase shared;
      const bool use_shared = !ben_db.empty();
      if (use_shared) shared = hmp::load_database(std::filesystem::path(ben_db));
      auto provider = [&](const hmp::Scenario& sc, const hmp::RobotModel& model) {
        return use_shared ? &shared : cache.get(sc, model);
      };
      const hmp::BenchResult result = hmp::bench(scenarios, methods, ben_reps, ben_seed, provider,
                                                 run_options(ben_fallback, ben_safety, ben_nominal));
      if (!ben_out.empty()) {
        std::ofstream out(ben_out);
        if (!out) throw hmp::InputError("cannot write " + ben_out);
        hmp::write_bench_csv(result, out);
      }
      hmp::write_bench_table(result, std::cout);
      return kExitGoal;
    }

    if (*db_build) {
      const hmp::RobotModel model = hmp::resolve_robot_model(build_model);
      const auto [lo, hi] = parse_workspace(build_ws);
      const auto spec = hmp::DbBuildSpec::for_model(
          model, build_eta * std::numbers::pi / 180.0, lo, hi, build_cell, build_zeta);
      hmp::BuildOptions options;
      options.threads = build_threads;
      options.budget = build_budget;
      const hmp::ConfigDatabase database = hmp::build_database(model, spec, options);
      hmp::save_database(database, std::filesystem::path(build_out));
      const auto st = database.stats();
      std::cout << "sweep " << spec.sweep_cardinality() << " configurations, " << st.cells
                << " cells, " << st.candidates << " candidates -> " << build_out << '\n';
      return kExitGoal;
    }

    if (*db_stats) {
      const hmp::ConfigDatabase database = hmp::load_database(std::filesystem::path(stats_file));
      const auto& spec = database.build_spec();
      const auto st = database.stats();
      const auto dims = spec.cell_dims();
      std::cout << "eta_deg          " << fmt(spec.eta * 180.0 / std::numbers::pi, 3) << '\n'
                << "active_joints    " << spec.active_joints << '\n'
                << "workspace        " << spec.workspace_lo.transpose() << " .. "
                << spec.workspace_hi.transpose() << '\n'
                << "grid             " << dims[0] << 'x' << dims[1] << 'x' << dims[2] << " @ "
                << spec.cell_size << " m\n"
                << "cells            " << st.cells << '\n'
                << "candidates       " << st.candidates << '\n'
                << "per_cell         min " << st.min_candidates << " mean "
                << fmt(st.mean_candidates, 2) << " max " << st.max_candidates << '\n'
                << "memory_bytes     " << st.memory_bytes << '\n';
      return kExitGoal;
    }

    if (*ik) {
      const hmp::RobotModel model = hmp::resolve_robot_model(ik_model);
      hmp::JointVector theta = model.zero_configuration();
      if (!ik_initial.empty()) {
        const auto v = parse_list(ik_initial);
        if (v.size() != model.dof()) throw hmp::InputError("--initial needs one value per joint");
        for (std::size_t i = 0; i < v.size(); ++i) theta[static_cast<Eigen::Index>(i)] = v[i];
        model.check(theta);
      }
      const hmp::Vec3 target = parse_vec3(ik_target);
      theta = hmp::ik_solve(model, theta, target, ik_iterations, 1e-12);
      const hmp::Vec3 reached = hmp::end_effector_position(model, theta);
      std::cout << std::setprecision(17) << '[';
      for (Eigen::Index i = 0; i < theta.size(); ++i) std::cout << (i ? ", " : "") << theta[i];
      std::cout << "]\n";
      std::cerr << "residual " << (reached - target).norm() << " m\n";
      return kExitGoal;
    }
  } catch (const hmp::LoadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const hmp::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const hmp::PreconditionError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const hmp::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kExitInput;
  } catch (const hmp::BudgetExceededError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitGoal;
}
