#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hmp/simulator.hpp"

namespace hmp {

struct BenchRow {
  std::string scenario;
  Method method = Method::kHybrid;
  int repetition = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::kBlocked;
  double solution_time_ms = 0.0;  // mean over the run's solution events
  std::size_t solution_events = 0;
  double joint_change_effort_rad = 0.0;
  double joint_travel_rad = 0.0;
  int env_collisions = 0;
  int reconfig_events = 0;
  int replan_events = 0;
  double path_length_m = 0.0;
};

struct BenchSummary {
  Method method = Method::kHybrid;
  RunningStats solution_time_ms;  // pooled over every solution event
  RunningStats joint_change_effort_rad;  // one sample per run
  int env_collisions = 0;
  int runs = 0;
  int goal_reached = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;  // sorted by (scenario, method, repetition)
  std::vector<BenchSummary> summary;  // one per method, in request order
};

/// Supplies the database for a scenario (hybrid only).
using DatabaseProvider = std::function<const ConfigDatabase*(const Scenario&, const RobotModel&)>;

/// Runs every scenario x method x repetition. Repetition r uses seed + r.
/// A run that throws aborts the bench with an Error naming the scenario.
BenchResult bench(const std::vector<Scenario>& scenarios, const std::vector<Method>& methods,
                  int repetitions, std::uint64_t seed, const DatabaseProvider& databases,
                  const RunOptions& options = {});

void write_bench_csv(const BenchResult& result, std::ostream& out);
void write_bench_table(const BenchResult& result, std::ostream& out);

/// Builds each distinct scenario database once and keeps it.
class DatabaseCache {
 public:
  const ConfigDatabase* get(const Scenario& scenario, const RobotModel& model);
  void insert(const DbBuildSpec& spec, ConfigDatabase db);

 private:
  std::vector<std::pair<DbBuildSpec, std::unique_ptr<ConfigDatabase>>> entries_;
};

}  // namespace hmp
