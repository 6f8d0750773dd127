#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hmp/robot_model.hpp"
#include "hmp/shapes.hpp"

namespace hmp {

/// Parameters of the offline forward-kinematics sweep.
///
/// Each active joint is sampled on the half-open lattice lo + i*eta < hi; the
/// remaining joints are held at zero. End-effector positions are binned into
/// cubic cells of `cell_size` starting at workspace_lo. The workspace spans
/// round((hi - lo) / cell_size) + 1 cells per axis, i.e. the cell starting at
/// workspace_hi is included (0.0..0.7 m at 0.01 m gives 71 cells).
///
/// With cell_size == zeta, a candidate in the cell of a cell-center waypoint
/// lies within (sqrt(3)/2) * zeta of it.
struct DbBuildSpec {
  double eta = 0.0;                 // lattice spacing, radians
  std::vector<JointLimit> joint_range;  // one [lo, hi) per active joint
  Vec3 workspace_lo = Vec3::Zero();
  Vec3 workspace_hi = Vec3::Zero();
  double cell_size = 0.01;
  double zeta = 0.01;
  std::size_t active_joints = 0;
  std::size_t dof = 0;  // joint count of the model the sweep belongs to

  /// Uniform spec over [-pi, pi) for every active joint of `model`.
  static DbBuildSpec for_model(const RobotModel& model, double eta, const Vec3& workspace_lo,
                               const Vec3& workspace_hi, double cell_size, double zeta);

  void validate() const;
  std::vector<int> steps_per_joint() const;
  /// Product of steps_per_joint(), before any workspace filtering.
  unsigned long long sweep_cardinality() const;
  std::array<int, 3> cell_dims() const;
  std::size_t cell_count() const;

  bool operator==(const DbBuildSpec& other) const;
};

/// Closed form used for budget checks: steps^joints.
unsigned long long sweep_cardinality(int steps_per_joint, int joints);

struct CellKey {
  int ix = 0;
  int iy = 0;
  int iz = 0;

  bool operator==(const CellKey&) const = default;
};

/// Read-only view of the candidates stored for one cell, in sweep order.
/// Each record holds one lattice index per active joint.
class CandidateSet {
 public:
  CandidateSet() = default;
  CandidateSet(std::span<const std::uint8_t> records, std::size_t active_joints)
      : records_(records), active_(active_joints) {}

  std::size_t size() const { return active_ == 0 ? 0 : records_.size() / active_; }
  bool empty() const { return size() == 0; }
  std::span<const std::uint8_t> indices(std::size_t i) const {
    return records_.subspan(i * active_, active_);
  }

 private:
  std::span<const std::uint8_t> records_;
  std::size_t active_ = 0;
};

struct DbStats {
  std::size_t cells = 0;
  std::size_t candidates = 0;
  std::size_t min_candidates = 0;
  double mean_candidates = 0.0;
  std::size_t max_candidates = 0;
  std::size_t memory_bytes = 0;
};

class ConfigDatabase {
 public:
  ConfigDatabase() = default;

  const DbBuildSpec& build_spec() const { return spec_; }
  std::uint64_t model_fingerprint() const { return model_fingerprint_; }
  std::size_t total_cells() const { return keys_.size(); }
  std::size_t total_candidates() const;

  std::optional<CellKey> cell_of(const Vec3& x) const;
  Vec3 cell_center(const CellKey& key) const;

  /// Candidates of the cell containing x; empty outside the workspace or for an
  /// unpopulated cell. Constant time.
  CandidateSet query(const Vec3& x) const;
  CandidateSet at(const CellKey& key) const;

  /// Populated cells in ascending linear order (x fastest).
  std::vector<CellKey> keys() const;

  /// Lattice angle of one joint index.
  double angle(std::size_t joint, std::uint8_t index) const;
  /// Full joint vector: active joints from the lattice, the rest held at zero.
  JointVector dequantize(std::span<const std::uint8_t> indices) const;
  /// Inverse of dequantize for lattice configurations; nullopt off-lattice.
  std::optional<std::vector<std::uint8_t>> quantize(const JointVector& theta) const;

  DbStats stats() const;

  bool operator==(const ConfigDatabase& other) const;

 private:
  friend class ConfigDatabaseBuilder;
  friend ConfigDatabase load_database(std::istream& in);

  std::size_t linear(const CellKey& key) const;
  CellKey unlinear(std::size_t index) const;
  void rebuild_lookup();

  DbBuildSpec spec_;
  std::uint64_t model_fingerprint_ = 0;
  std::vector<std::uint32_t> keys_;      // populated linear cell indices, ascending
  std::vector<std::uint64_t> offsets_;   // record offsets, keys_.size() + 1 entries
  std::vector<std::uint8_t> records_;
  std::vector<std::uint32_t> slot_;      // linear cell -> position in keys_
};

struct BuildOptions {
  /// Refuse sweeps with more lattice points than this.
  unsigned long long budget = 10'000'000'000ULL;
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  /// Optional filter (e.g. self-collision); returning true drops the config.
  std::function<bool(const JointVector&)> reject;
};

/// Sweeps every lattice configuration, bins F(theta) into workspace cells and
/// stores the lattice indices per cell in sweep (lexicographic) order.
/// Throws BudgetExceededError when the sweep is larger than options.budget.
ConfigDatabase build_database(const RobotModel& model, const DbBuildSpec& spec,
                              const BuildOptions& options = {});

/// Little-endian, versioned, checksummed serialization.
void save_database(const ConfigDatabase& db, std::ostream& out);
ConfigDatabase load_database(std::istream& in);
void save_database(const ConfigDatabase& db, const std::filesystem::path& path);
ConfigDatabase load_database(const std::filesystem::path& path);

inline constexpr char kDatabaseMagic[8] = {'H', 'M', 'P', 'C', 'F', 'G', 'D', 'B'};
inline constexpr std::uint32_t kDatabaseVersion = 1;

}  // namespace hmp
