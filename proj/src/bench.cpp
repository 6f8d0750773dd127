#include "hmp/bench.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "hmp/errors.hpp"

namespace hmp {
namespace {

std::string pm(const RunningStats& s, int precision) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << s.mean() << " +/- " << s.stddev();
  return out.str();
}

}  // namespace

const ConfigDatabase* DatabaseCache::get(const Scenario& scenario, const RobotModel& model) {
  const DbBuildSpec spec = scenario.database.build_spec(model);
  for (const auto& [key, db] : entries_) {
    if (key == spec && db->model_fingerprint() == model.fingerprint()) return db.get();
  }
  entries_.emplace_back(spec, std::make_unique<ConfigDatabase>(build_database(model, spec)));
  return entries_.back().second.get();
}

void DatabaseCache::insert(const DbBuildSpec& spec, ConfigDatabase db) {
  entries_.emplace_back(spec, std::make_unique<ConfigDatabase>(std::move(db)));
}

BenchResult bench(const std::vector<Scenario>& scenarios, const std::vector<Method>& methods,
                  int repetitions, std::uint64_t seed, const DatabaseProvider& databases,
                  const RunOptions& options) {
  if (repetitions < 1) throw InputError("bench needs at least one repetition");
  BenchResult result;
  std::vector<std::vector<double>> pooled_times(methods.size());
  for (Method m : methods) {
    BenchSummary s;
    s.method = m;
    result.summary.push_back(s);
  }
  for (const auto& sc : scenarios) {
    const RobotModel model = sc.resolve_model();
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const Method m = methods[mi];
      const ConfigDatabase* db = nullptr;
      for (int r = 0; r < repetitions; ++r) {
        const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(r);
        RunResult out;
        try {
          if (m == Method::kHybrid && db == nullptr) db = databases(sc, model);
          out = run(sc, model, db, m, run_seed, options);
        } catch (const std::exception& e) {
          throw Error("bench aborted in scenario '" + sc.name + "' (" + to_string(m) +
                      "): " + e.what());
        }
        const Metrics& mt = out.metrics;
        BenchRow row;
        row.scenario = sc.name;
        row.method = m;
        row.repetition = r;
        row.seed = run_seed;
        row.status = mt.status;
        row.solution_time_ms = mt.solution_time().mean();
        row.solution_events = mt.solution_times_ms.size();
        row.joint_change_effort_rad = mt.joint_change_effort_rad;
        row.joint_travel_rad = mt.joint_travel_rad;
        row.env_collisions = mt.env_collisions;
        row.reconfig_events = mt.reconfig_events;
        row.replan_events = mt.replan_events;
        row.path_length_m = mt.path_length_m;
        result.rows.push_back(row);

        auto& s = result.summary[mi];
        pooled_times[mi].insert(pooled_times[mi].end(), mt.solution_times_ms.begin(),
                                mt.solution_times_ms.end());
        s.joint_change_effort_rad.add(mt.joint_change_effort_rad);
        s.env_collisions += mt.env_collisions;
        ++s.runs;
        if (mt.status == RunStatus::kGoalReached) ++s.goal_reached;
      }
    }
  }
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    result.summary[mi].solution_time_ms = summarize(pooled_times[mi]);
  }
  std::stable_sort(result.rows.begin(), result.rows.end(),
                   [](const BenchRow& a, const BenchRow& b) {
                     if (a.scenario != b.scenario) return a.scenario < b.scenario;
                     if (a.method != b.method) return a.method < b.method;
                     return a.repetition < b.repetition;
                   });
  return result;
}

void write_bench_csv(const BenchResult& result, std::ostream& out) {
  out << "scenario,method,repetition,seed,status,solution_time_ms,solution_events,"
         "joint_change_effort_rad,joint_travel_rad,env_collisions,reconfig_events,replan_events,path_length_m\n";
  out << std::setprecision(17);
  for (const auto& r : result.rows) {
    out << r.scenario << ',' << to_string(r.method) << ',' << r.repetition << ',' << r.seed << ','
        << to_string(r.status) << ',' << r.solution_time_ms << ',' << r.solution_events << ','
        << r.joint_change_effort_rad << ',' << r.joint_travel_rad << ',' << r.env_collisions << ',' << r.reconfig_events << ','
        << r.replan_events << ',' << r.path_length_m << '\n';
  }
}

void write_bench_table(const BenchResult& result, std::ostream& out) {
  const int w0 = 14, w1 = 24, w2 = 26, w3 = 16, w4 = 10;
  out << std::left << std::setw(w0) << "Method" << std::setw(w1) << "Solution Time (ms)"
      << std::setw(w2) << "Joint Change Effort (rad)" << std::setw(w3) << "Env. Collisions"
      << std::setw(w4) << "Reached" << '\n';
  for (const auto& s : result.summary) {
    std::ostringstream reached;
    reached << s.goal_reached << '/' << s.runs;
    out << std::left << std::setw(w0) << to_string(s.method) << std::setw(w1)
        << pm(s.solution_time_ms, 3) << std::setw(w2) << pm(s.joint_change_effort_rad, 3)
        << std::setw(w3) << s.env_collisions << std::setw(w4) << reached.str() << '\n';
  }
}

}  // namespace hmp
