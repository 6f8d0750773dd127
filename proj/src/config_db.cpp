#include "hmp/config_db.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "hmp/errors.hpp"
#include "hmp/kinematics.hpp"

namespace hmp {
namespace {

constexpr double kStepSlack = 1e-9;
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_update(std::uint64_t& hash, const std::uint8_t* data, std::size_t size) {
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= data[i];
    hash *= kFnvPrime;
  }
}

// Little-endian sink that hashes what it writes and flushes in chunks.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
    if (buf_.size() >= kChunk) flush();
  }
  template <typename T>
  void uint(T v) {
    std::uint8_t raw[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      raw[i] = static_cast<std::uint8_t>(v & 0xff);
      v = static_cast<T>(v >> 8);
    }
    bytes(raw, sizeof(T));
  }
  void i32(std::int32_t v) { uint(static_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

  // Appends the checksum of everything written so far.
  void finish() {
    flush();
    const std::uint64_t sum = hash_;
    uint(sum);
    flush();
  }

 private:
  static constexpr std::size_t kChunk = 1 << 20;

  void flush() {
    fnv_update(hash_, buf_.data(), buf_.size());
    out_.write(reinterpret_cast<const char*>(buf_.data()),
               static_cast<std::streamsize>(buf_.size()));
    if (!out_) throw LoadError(LoadErrorKind::kIo, "failed writing database stream");
    buf_.clear();
  }

  std::ostream& out_;
  std::vector<std::uint8_t> buf_;
  std::uint64_t hash_ = kFnvOffset;
};

// Little-endian source; running out of bytes is a truncation.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void take(void* dest, std::size_t n) {
    in_.read(static_cast<char*>(dest), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw LoadError(LoadErrorKind::kTruncated, "database stream truncated");
    }
  }
  template <typename T>
  T uint() {
    std::uint8_t p[sizeof(T)];
    take(p, sizeof(T));
    T v = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) v = static_cast<T>((v << 8) | p[i]);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

 private:
  std::istream& in_;
};

std::size_t header_size(std::size_t active) {
  // magic, version, dof, active, eta, ranges, ws lo/hi, cell, zeta,
  // fingerprint, cell count, candidate count
  return 8 + 4 + 4 + 4 + 8 + active * 16 + 48 + 8 + 8 + 8 + 8 + 8;
}

}  // namespace

// ---------------------------------------------------------------------------
// DbBuildSpec

DbBuildSpec DbBuildSpec::for_model(const RobotModel& model, double eta, const Vec3& workspace_lo,
                                   const Vec3& workspace_hi, double cell_size, double zeta) {
  DbBuildSpec spec;
  spec.eta = eta;
  spec.active_joints = model.active_joint_count();
  spec.dof = model.dof();
  spec.joint_range.assign(spec.active_joints,
                          JointLimit{-std::numbers::pi, std::numbers::pi});
  spec.workspace_lo = workspace_lo;
  spec.workspace_hi = workspace_hi;
  spec.cell_size = cell_size;
  spec.zeta = zeta;
  return spec;
}

void DbBuildSpec::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InputError("eta must be > 0");
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw InputError("cell size must be > 0");
  if (!(zeta > 0.0)) throw InputError("zeta must be > 0");
  if (active_joints == 0) throw InputError("database needs at least one active joint");
  if (dof < active_joints) throw InputError("database dof smaller than active joint count");
  if (joint_range.size() != active_joints) {
    throw InputError("one joint range per active joint required");
  }
  for (const auto& r : joint_range) {
    if (!(r.lo < r.hi)) throw InputError("joint range lo must be < hi");
  }
  for (int a = 0; a < 3; ++a) {
    if (!(workspace_lo[a] < workspace_hi[a])) throw InputError("workspace lo must be < hi");
  }
  for (int steps : steps_per_joint()) {
    if (steps < 1) throw InputError("joint range shorter than eta");
    if (steps > 256) {
      throw InputError("more than 256 lattice steps per joint; indices are stored in one byte");
    }
  }
  const auto dims = cell_dims();
  if (static_cast<double>(dims[0]) * dims[1] * dims[2] >
      static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
    throw InputError("workspace has too many cells");
  }
}

std::vector<int> DbBuildSpec::steps_per_joint() const {
  std::vector<int> steps;
  steps.reserve(joint_range.size());
  for (const auto& r : joint_range) {
    // Count of i with lo + i*eta < hi; an integer ratio leaves hi itself out.
    const double ratio = (r.hi - r.lo) / eta;
    steps.push_back(static_cast<int>(std::ceil(ratio - kStepSlack)));
  }
  return steps;
}

unsigned long long DbBuildSpec::sweep_cardinality() const {
  unsigned long long total = 1;
  for (int s : steps_per_joint()) {
    if (s <= 0) return 0;
    if (total > std::numeric_limits<unsigned long long>::max() / static_cast<unsigned>(s)) {
      return std::numeric_limits<unsigned long long>::max();
    }
    total *= static_cast<unsigned long long>(s);
  }
  return total;
}

std::array<int, 3> DbBuildSpec::cell_dims() const {
  std::array<int, 3> dims{};
  for (int a = 0; a < 3; ++a) {
    dims[a] = static_cast<int>(std::lround((workspace_hi[a] - workspace_lo[a]) / cell_size)) + 1;
  }
  return dims;
}

std::size_t DbBuildSpec::cell_count() const {
  const auto d = cell_dims();
  return static_cast<std::size_t>(d[0]) * d[1] * d[2];
}

bool DbBuildSpec::operator==(const DbBuildSpec& o) const {
  if (eta != o.eta || cell_size != o.cell_size || zeta != o.zeta ||
      active_joints != o.active_joints || dof != o.dof || workspace_lo != o.workspace_lo ||
      workspace_hi != o.workspace_hi || joint_range.size() != o.joint_range.size()) {
    return false;
  }
  for (std::size_t i = 0; i < joint_range.size(); ++i) {
    if (joint_range[i].lo != o.joint_range[i].lo || joint_range[i].hi != o.joint_range[i].hi) {
      return false;
    }
  }
  return true;
}

unsigned long long sweep_cardinality(int steps_per_joint, int joints) {
  if (steps_per_joint <= 0 || joints < 0) return 0;
  unsigned long long total = 1;
  for (int i = 0; i < joints; ++i) total *= static_cast<unsigned long long>(steps_per_joint);
  return total;
}

// ---------------------------------------------------------------------------
// ConfigDatabase

std::size_t ConfigDatabase::total_candidates() const {
  return spec_.active_joints == 0 ? 0 : records_.size() / spec_.active_joints;
}

std::size_t ConfigDatabase::linear(const CellKey& key) const {
  const auto d = spec_.cell_dims();
  return (static_cast<std::size_t>(key.iz) * d[1] + key.iy) * d[0] + key.ix;
}

CellKey ConfigDatabase::unlinear(std::size_t index) const {
  const auto d = spec_.cell_dims();
  CellKey key;
  key.ix = static_cast<int>(index % d[0]);
  index /= d[0];
  key.iy = static_cast<int>(index % d[1]);
  key.iz = static_cast<int>(index / d[1]);
  return key;
}

std::optional<CellKey> ConfigDatabase::cell_of(const Vec3& x) const {
  if (spec_.active_joints == 0 || !x.allFinite()) return std::nullopt;
  const auto d = spec_.cell_dims();
  int idx[3];
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((x[a] - spec_.workspace_lo[a]) / spec_.cell_size);
    if (f < 0.0 || f >= d[a]) return std::nullopt;
    idx[a] = static_cast<int>(f);
  }
  return CellKey{idx[0], idx[1], idx[2]};
}

Vec3 ConfigDatabase::cell_center(const CellKey& key) const {
  return spec_.workspace_lo +
         spec_.cell_size * Vec3(key.ix + 0.5, key.iy + 0.5, key.iz + 0.5);
}

CandidateSet ConfigDatabase::at(const CellKey& key) const {
  const auto d = spec_.cell_dims();
  if (key.ix < 0 || key.iy < 0 || key.iz < 0 || key.ix >= d[0] || key.iy >= d[1] ||
      key.iz >= d[2] || slot_.empty()) {
    return {};
  }
  const std::uint32_t slot = slot_[linear(key)];
  if (slot == std::numeric_limits<std::uint32_t>::max()) return {};
  const auto begin = offsets_[slot] * spec_.active_joints;
  const auto end = offsets_[slot + 1] * spec_.active_joints;
  return CandidateSet(std::span<const std::uint8_t>(records_.data() + begin, end - begin),
                      spec_.active_joints);
}

CandidateSet ConfigDatabase::query(const Vec3& x) const {
  const auto key = cell_of(x);
  if (!key) return {};
  return at(*key);
}

std::vector<CellKey> ConfigDatabase::keys() const {
  std::vector<CellKey> out;
  out.reserve(keys_.size());
  for (auto k : keys_) out.push_back(unlinear(k));
  return out;
}

double ConfigDatabase::angle(std::size_t joint, std::uint8_t index) const {
  return spec_.joint_range[joint].lo + static_cast<double>(index) * spec_.eta;
}

JointVector ConfigDatabase::dequantize(std::span<const std::uint8_t> indices) const {
  if (indices.size() != spec_.active_joints) {
    throw InputError("index record length does not match active joint count");
  }
  JointVector theta = JointVector::Zero(static_cast<Eigen::Index>(spec_.dof));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    theta[static_cast<Eigen::Index>(j)] = angle(j, indices[j]);
  }
  return theta;
}

std::optional<std::vector<std::uint8_t>> ConfigDatabase::quantize(const JointVector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != spec_.dof) return std::nullopt;
  const auto steps = spec_.steps_per_joint();
  std::vector<std::uint8_t> out(spec_.active_joints);
  for (std::size_t j = 0; j < spec_.active_joints; ++j) {
    const double v = theta[static_cast<Eigen::Index>(j)];
    const double r = std::round((v - spec_.joint_range[j].lo) / spec_.eta);
    if (r < 0 || r >= steps[j]) return std::nullopt;
    const auto idx = static_cast<std::uint8_t>(r);
    if (angle(j, idx) != v) return std::nullopt;
    out[j] = idx;
  }
  for (std::size_t j = spec_.active_joints; j < spec_.dof; ++j) {
    if (theta[static_cast<Eigen::Index>(j)] != 0.0) return std::nullopt;
  }
  return out;
}

DbStats ConfigDatabase::stats() const {
  DbStats s;
  s.cells = keys_.size();
  s.candidates = total_candidates();
  if (s.cells == 0) return s;
  s.min_candidates = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const std::size_t n = offsets_[i + 1] - offsets_[i];
    s.min_candidates = std::min(s.min_candidates, n);
    s.max_candidates = std::max(s.max_candidates, n);
  }
  s.mean_candidates = static_cast<double>(s.candidates) / static_cast<double>(s.cells);
  s.memory_bytes = records_.size() + keys_.size() * sizeof(std::uint32_t) +
                   offsets_.size() * sizeof(std::uint64_t) +
                   slot_.size() * sizeof(std::uint32_t);
  return s;
}

bool ConfigDatabase::operator==(const ConfigDatabase& o) const {
  return spec_ == o.spec_ && model_fingerprint_ == o.model_fingerprint_ && keys_ == o.keys_ &&
         offsets_ == o.offsets_ && records_ == o.records_;
}

void ConfigDatabase::rebuild_lookup() {
  slot_.assign(spec_.cell_count(), std::numeric_limits<std::uint32_t>::max());
  for (std::size_t i = 0; i < keys_.size(); ++i) slot_[keys_[i]] = static_cast<std::uint32_t>(i);
}

// ---------------------------------------------------------------------------
// Build

class ConfigDatabaseBuilder {
 public:
  ConfigDatabaseBuilder(const RobotModel& model, const DbBuildSpec& spec,
                        const BuildOptions& options)
      : model_(model), spec_(spec), options_(options) {
    steps_ = spec_.steps_per_joint();
    dims_ = spec_.cell_dims();
    const std::size_t k = spec_.active_joints;
    link_.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      link_[j].reserve(steps_[j]);
      for (int i = 0; i < steps_[j]; ++i) {
        const double a = spec_.joint_range[j].lo + static_cast<double>(i) * spec_.eta;
        link_[j].push_back(dh_transform(model_.dh_rows()[j], a));
      }
    }
    // Everything past the last active joint is fixed: fold it into one
    // end-effector point per lattice value of that joint.
    HomogeneousTransform rest = HomogeneousTransform::Identity();
    for (std::size_t j = k; j < model_.dof(); ++j) {
      rest = rest * dh_transform(model_.dh_rows()[j], 0.0);
    }
    const Vec3 tip = rest * Vec3(0.0, 0.0, model_.tool_offset());
    tail_.reserve(steps_[k - 1]);
    for (const auto& t : link_[k - 1]) tail_.push_back(t * tip);
  }

  ConfigDatabase run() {
    const std::size_t cells = spec_.cell_count();
    unsigned threads = options_.threads;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(steps_[0]));

    // Contiguous ranges of the outermost joint per worker keep sweep order when
    // the per-worker results are concatenated.
    std::vector<std::pair<int, int>> ranges;
    for (unsigned t = 0; t < threads; ++t) {
      ranges.emplace_back(static_cast<int>(steps_[0] * static_cast<long>(t) / threads),
                          static_cast<int>(steps_[0] * static_cast<long>(t + 1) / threads));
    }

    // Pass 1: per-worker cell counts.
    std::vector<std::vector<std::uint32_t>> counts(threads, std::vector<std::uint32_t>(cells, 0));
    parallel(ranges, [&](unsigned t, int i0) {
      sweep(i0, [&](std::uint32_t cell, const std::uint8_t*) { ++counts[t][cell]; });
    });

    // Offsets per cell, then per worker within the cell.
    ConfigDatabase db;
    db.spec_ = spec_;
    db.model_fingerprint_ = model_.fingerprint();
    std::vector<std::uint64_t> cursor(cells * threads, 0);
    std::uint64_t running = 0;
    db.offsets_.push_back(0);
    for (std::size_t c = 0; c < cells; ++c) {
      std::uint64_t n = 0;
      for (unsigned t = 0; t < threads; ++t) {
        cursor[c * threads + t] = running + n;
        n += counts[t][c];
      }
      if (n == 0) continue;
      db.keys_.push_back(static_cast<std::uint32_t>(c));
      running += n;
      db.offsets_.push_back(running);
    }
    counts.clear();
    counts.shrink_to_fit();

    const std::size_t k = spec_.active_joints;
    db.records_.assign(running * k, 0);
    // Pass 2: fill. Each worker owns its cursor column, so no locking.
    parallel(ranges, [&](unsigned t, int i0) {
      sweep(i0, [&](std::uint32_t cell, const std::uint8_t* idx) {
        auto& pos = cursor[static_cast<std::size_t>(cell) * threads + t];
        std::memcpy(db.records_.data() + pos * k, idx, k);
        ++pos;
      });
    });
    db.rebuild_lookup();
    return db;
  }

 private:
  template <typename Fn>
  void parallel(const std::vector<std::pair<int, int>>& ranges, Fn&& fn) {
    auto work = [&](unsigned t) {
      for (int i0 = ranges[t].first; i0 < ranges[t].second; ++i0) fn(t, i0);
    };
    if (ranges.size() == 1) {
      work(0);
      return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < ranges.size(); ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  // Visits every lattice point whose outermost index is i0, in lexicographic
  // order, calling emit(cell, indices) for those inside the workspace.
  template <typename Emit>
  void sweep(int i0, Emit&& emit) const {
    const std::size_t k = spec_.active_joints;
    std::uint8_t idx[256];
    std::vector<HomogeneousTransform> stack(k);
    idx[0] = static_cast<std::uint8_t>(i0);
    stack[0] = link_[0][i0];
    JointVector theta;
    if (options_.reject) theta = JointVector::Zero(static_cast<Eigen::Index>(spec_.dof));

    auto leaf = [&](const HomogeneousTransform& parent) {
      for (int i = 0; i < steps_[k - 1]; ++i) {
        const Vec3 p = parent * tail_[i];
        const auto cell = bin(p);
        if (!cell) continue;
        idx[k - 1] = static_cast<std::uint8_t>(i);
        if (options_.reject) {
          for (std::size_t j = 0; j < k; ++j) {
            theta[static_cast<Eigen::Index>(j)] =
                spec_.joint_range[j].lo + static_cast<double>(idx[j]) * spec_.eta;
          }
          if (options_.reject(theta)) continue;
        }
        emit(*cell, idx);
      }
    };

    if (k == 1) {
      // Single active joint: the tail already includes link 0.
      if (const auto cell = bin(tail_[i0])) {
        if (!options_.reject ||
            !options_.reject(dequantize_one(static_cast<std::uint8_t>(i0)))) {
          emit(*cell, idx);
        }
      }
      return;
    }
    descend(1, stack, idx, leaf);
  }

  template <typename Leaf>
  void descend(std::size_t depth, std::vector<HomogeneousTransform>& stack, std::uint8_t* idx,
               Leaf& leaf) const {
    const std::size_t k = spec_.active_joints;
    if (depth == k - 1) {
      leaf(stack[depth - 1]);
      return;
    }
    for (int i = 0; i < steps_[depth]; ++i) {
      idx[depth] = static_cast<std::uint8_t>(i);
      stack[depth] = stack[depth - 1] * link_[depth][i];
      descend(depth + 1, stack, idx, leaf);
    }
  }

  JointVector dequantize_one(std::uint8_t i0) const {
    JointVector theta = JointVector::Zero(static_cast<Eigen::Index>(spec_.dof));
    theta[0] = spec_.joint_range[0].lo + static_cast<double>(i0) * spec_.eta;
    return theta;
  }

  std::optional<std::uint32_t> bin(const Vec3& p) const {
    std::uint32_t lin = 0;
    std::uint32_t stride = 1;
    for (int a = 0; a < 3; ++a) {
      const double f = std::floor((p[a] - spec_.workspace_lo[a]) / spec_.cell_size);
      if (!(f >= 0.0) || f >= dims_[a]) return std::nullopt;
      lin += static_cast<std::uint32_t>(f) * stride;
      stride *= static_cast<std::uint32_t>(dims_[a]);
    }
    return lin;
  }

  const RobotModel& model_;
  const DbBuildSpec& spec_;
  const BuildOptions& options_;
  std::vector<int> steps_;
  std::array<int, 3> dims_{};
  std::vector<std::vector<HomogeneousTransform>> link_;
  std::vector<Vec3> tail_;
};

ConfigDatabase build_database(const RobotModel& model, const DbBuildSpec& spec,
                              const BuildOptions& options) {
  spec.validate();
  if (spec.dof != model.dof() || spec.active_joints != model.active_joint_count()) {
    throw InputError("database spec does not match the robot model's joint layout");
  }
  const auto cardinality = spec.sweep_cardinality();
  if (cardinality > options.budget) throw BudgetExceededError(cardinality, options.budget);
  return ConfigDatabaseBuilder(model, spec, options).run();
}

// ---------------------------------------------------------------------------
// Serialization

void save_database(const ConfigDatabase& db, std::ostream& out) {
  const auto& spec = db.build_spec();
  const std::size_t k = spec.active_joints;
  Writer w(out);
  w.bytes(kDatabaseMagic, sizeof(kDatabaseMagic));
  w.uint<std::uint32_t>(kDatabaseVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(spec.dof));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(k));
  w.f64(spec.eta);
  for (const auto& r : spec.joint_range) {
    w.f64(r.lo);
    w.f64(r.hi);
  }
  for (int a = 0; a < 3; ++a) w.f64(spec.workspace_lo[a]);
  for (int a = 0; a < 3; ++a) w.f64(spec.workspace_hi[a]);
  w.f64(spec.cell_size);
  w.f64(spec.zeta);
  w.uint<std::uint64_t>(db.model_fingerprint());
  w.uint<std::uint64_t>(db.total_cells());
  w.uint<std::uint64_t>(db.total_candidates());
  for (const auto& key : db.keys()) {
    const auto set = db.at(key);
    w.i32(key.ix);
    w.i32(key.iy);
    w.i32(key.iz);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(set.size()));
    if (!set.empty()) w.bytes(set.indices(0).data(), set.size() * k);
  }
  w.finish();
}

ConfigDatabase load_database(std::istream& in) {
  // Two passes: the checksum is verified before any structural check so a
  // corrupted payload reports as such. Unseekable input is buffered first.
  in.seekg(0, std::ios::end);
  const std::streamoff end = in.tellg();
  if (end < 0) {
    in.clear();
    std::stringstream copy;
    copy << in.rdbuf();
    return load_database(copy);
  }
  in.seekg(0, std::ios::beg);
  const auto size = static_cast<std::uint64_t>(end);

  Reader r(in);
  char magic[sizeof(kDatabaseMagic)];
  if (size < sizeof(magic)) {
    throw LoadError(LoadErrorKind::kTruncated, "database stream shorter than its magic");
  }
  r.take(magic, sizeof(magic));
  if (std::memcmp(magic, kDatabaseMagic, sizeof(magic)) != 0) {
    throw LoadError(LoadErrorKind::kBadMagic, "not a configuration database");
  }
  const auto version = r.uint<std::uint32_t>();
  if (version != kDatabaseVersion) {
    throw LoadError(LoadErrorKind::kUnsupportedVersion,
                    "unsupported database version " + std::to_string(version));
  }
  ConfigDatabase db;
  auto& spec = db.spec_;
  spec.dof = r.uint<std::uint32_t>();
  spec.active_joints = r.uint<std::uint32_t>();
  if (spec.active_joints == 0 || spec.active_joints > 64 || spec.dof < spec.active_joints) {
    throw LoadError(LoadErrorKind::kMalformed, "bad joint counts in database header");
  }
  const std::size_t k = spec.active_joints;
  spec.eta = r.f64();
  spec.joint_range.resize(k);
  for (auto& range : spec.joint_range) {
    range.lo = r.f64();
    range.hi = r.f64();
  }
  for (int a = 0; a < 3; ++a) spec.workspace_lo[a] = r.f64();
  for (int a = 0; a < 3; ++a) spec.workspace_hi[a] = r.f64();
  spec.cell_size = r.f64();
  spec.zeta = r.f64();
  db.model_fingerprint_ = r.uint<std::uint64_t>();
  const auto cell_count = r.uint<std::uint64_t>();
  const auto candidate_count = r.uint<std::uint64_t>();

  const long double expected = static_cast<long double>(header_size(k)) +
                               static_cast<long double>(cell_count) * 16.0L +
                               static_cast<long double>(candidate_count) * k + 8.0L;
  if (static_cast<long double>(size) < expected) {
    throw LoadError(LoadErrorKind::kTruncated, "database stream truncated");
  }
  if (static_cast<long double>(size) > expected) {
    throw LoadError(LoadErrorKind::kMalformed, "trailing bytes after database payload");
  }

  {
    in.seekg(0, std::ios::beg);
    std::uint64_t hash = kFnvOffset;
    std::vector<std::uint8_t> chunk(1 << 20);
    std::uint64_t left = size - 8;
    while (left > 0) {
      const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(left, chunk.size()));
      r.take(chunk.data(), n);
      fnv_update(hash, chunk.data(), n);
      left -= n;
    }
    if (r.uint<std::uint64_t>() != hash) {
      throw LoadError(LoadErrorKind::kChecksumMismatch, "database checksum mismatch");
    }
    in.clear();
    in.seekg(static_cast<std::streamoff>(header_size(k)), std::ios::beg);
  }

  try {
    spec.validate();
  } catch (const InputError& e) {
    throw LoadError(LoadErrorKind::kMalformed, std::string("database spec: ") + e.what());
  }
  const auto dims = spec.cell_dims();
  const auto steps = spec.steps_per_joint();
  db.keys_.reserve(cell_count);
  db.offsets_.reserve(cell_count + 1);
  db.offsets_.push_back(0);
  db.records_.resize(candidate_count * k);
  std::uint64_t running = 0;
  for (std::uint64_t c = 0; c < cell_count; ++c) {
    CellKey key;
    key.ix = r.i32();
    key.iy = r.i32();
    key.iz = r.i32();
    const auto n = r.uint<std::uint32_t>();
    if (key.ix < 0 || key.iy < 0 || key.iz < 0 || key.ix >= dims[0] || key.iy >= dims[1] ||
        key.iz >= dims[2] || n == 0) {
      throw LoadError(LoadErrorKind::kMalformed, "bad cell record in database");
    }
    const auto lin = static_cast<std::uint32_t>(db.linear(key));
    if (!db.keys_.empty() && lin <= db.keys_.back()) {
      throw LoadError(LoadErrorKind::kMalformed, "database cells out of order");
    }
    if (running + n > candidate_count) {
      throw LoadError(LoadErrorKind::kMalformed, "candidate count exceeds header");
    }
    std::uint8_t* p = db.records_.data() + running * k;
    r.take(p, static_cast<std::size_t>(n) * k);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * k; ++i) {
      if (p[i] >= steps[i % k]) throw LoadError(LoadErrorKind::kMalformed, "index off lattice");
    }
    running += n;
    db.keys_.push_back(lin);
    db.offsets_.push_back(running);
  }
  if (running != candidate_count) {
    throw LoadError(LoadErrorKind::kMalformed, "candidate count disagrees with header");
  }
  db.rebuild_lookup();
  return db;
}

void save_database(const ConfigDatabase& db, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(LoadErrorKind::kIo, "cannot write " + path.string());
  save_database(db, out);
}

ConfigDatabase load_database(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::kIo, "cannot open " + path.string());
  return load_database(in);
}

}  // namespace hmp
