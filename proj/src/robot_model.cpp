#include "hmp/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "hmp/errors.hpp"

namespace hmp {
namespace {

constexpr double kPi = std::numbers::pi;

// Maps an angle into (-pi, pi].
double normalize_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

void fnv_mix(std::uint64_t& hash, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
}

void fnv_mix(std::uint64_t& hash, double value) {
  fnv_mix(hash, &value, sizeof(value));
}

Vec3 read_vec3(const nlohmann::json& node, const char* field) {
  const auto& arr = node.at(field);
  if (!arr.is_array() || arr.size() != 3) {
    throw LoadError(LoadErrorKind::kMalformed,
                    std::string("field '") + field + "' must be a 3-vector");
  }
  return Vec3(arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>());
}

}  // namespace

RobotModel::RobotModel(std::string name, std::vector<DhRow> dh_rows,
                       std::vector<JointLimit> joint_limits,
                       std::vector<LinkCapsule> link_capsules,
                       double tool_offset, std::size_t active_joint_count)
    : name_(std::move(name)),
      dh_rows_(std::move(dh_rows)),
      joint_limits_(std::move(joint_limits)),
      link_capsules_(std::move(link_capsules)),
      tool_offset_(tool_offset),
      active_joint_count_(active_joint_count) {
  if (dh_rows_.empty()) throw InputError("robot model needs at least one DH row");
  if (dh_rows_.size() != joint_limits_.size()) {
    throw InputError("DH row count and joint limit count differ");
  }
  if (active_joint_count_ == 0 || active_joint_count_ > dh_rows_.size()) {
    throw InputError("active joint count must lie in [1, dof]");
  }
  for (auto& row : dh_rows_) row.alpha = normalize_angle(row.alpha);
  for (const auto& limit : joint_limits_) {
    if (!(limit.lo < limit.hi)) throw InputError("joint limit lo must be < hi");
  }
  for (const auto& capsule : link_capsules_) {
    if (!(capsule.radius > 0.0)) throw InputError("link capsule radius must be > 0");
    if (capsule.frame > dh_rows_.size()) {
      throw InputError("link capsule frame index out of range");
    }
  }
}

double RobotModel::reach() const {
  double total = std::abs(tool_offset_);
  for (const auto& row : dh_rows_) total += std::abs(row.a) + std::abs(row.d);
  return total;
}

bool RobotModel::within_limits(const JointVector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dof()) return false;
  for (std::size_t i = 0; i < dof(); ++i) {
    const double v = theta[static_cast<Eigen::Index>(i)];
    if (!std::isfinite(v) || v < joint_limits_[i].lo || v > joint_limits_[i].hi) {
      return false;
    }
  }
  return true;
}

void RobotModel::check(const JointVector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dof()) {
    throw InputError("joint vector has " + std::to_string(theta.size()) +
                     " entries, model has " + std::to_string(dof()) + " joints");
  }
  if (!within_limits(theta)) {
    std::ostringstream msg;
    msg << "joint vector outside limits: [" << theta.transpose() << "]";
    throw PreconditionError(msg.str());
  }
}

JointVector RobotModel::clamp(const JointVector& theta) const {
  JointVector out = theta;
  for (std::size_t i = 0; i < dof(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out[k] = std::clamp(out[k], joint_limits_[i].lo, joint_limits_[i].hi);
  }
  return out;
}

std::uint64_t RobotModel::fingerprint() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& row : dh_rows_) {
    fnv_mix(hash, row.alpha);
    fnv_mix(hash, row.a);
    fnv_mix(hash, row.d);
    fnv_mix(hash, row.theta_offset);
  }
  fnv_mix(hash, tool_offset_);
  const std::uint64_t active = active_joint_count_;
  fnv_mix(hash, &active, sizeof(active));
  return hash;
}

RobotModel ur5e_model() {
  constexpr double h = kPi / 2.0;
  std::vector<DhRow> dh = {
      {h, 0.0, 0.1625, kPi},
      {0.0, -0.425, 0.0, 0.0},
      {0.0, -0.3922, 0.0, 0.0},
      {h, 0.0, 0.1333, 0.0},
      {-h, 0.0, 0.0997, 0.0},
      {0.0, 0.0, 0.0996, 0.0},
  };
  std::vector<JointLimit> limits(6, JointLimit{-kPi, kPi});
  constexpr double tool = 0.017;
  std::vector<LinkCapsule> capsules = {
      {0, Vec3(0, 0, 0), Vec3(0, 0, 0.1625), 0.075},         // base column
      {1, Vec3(0, 0, 0), Vec3(0, 0, 0.138), 0.06},           // shoulder housing
      {2, Vec3(0.425, 0, 0.138), Vec3(0, 0, 0.138), 0.06},   // upper arm
      {2, Vec3(0, 0, 0.138), Vec3(0, 0, 0.007), 0.06},       // elbow housing
      {3, Vec3(0.3922, 0, 0.007), Vec3(0, 0, 0.007), 0.05},  // forearm
      {4, Vec3(0, -0.1263, 0), Vec3(0, 0, 0), 0.045},        // wrist 1
      {5, Vec3(0, 0.0997, 0), Vec3(0, 0, 0), 0.045},         // wrist 2
      {6, Vec3(0, 0, -(0.0996 + tool)), Vec3(0, 0, 0), 0.035},  // wrist 3 + gripper
  };
  return RobotModel("ur5e", std::move(dh), std::move(limits), std::move(capsules),
                    tool, 5);
}

RobotModel parse_robot_model(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadErrorKind::kMalformed, std::string("robot model: ") + e.what());
  }
  try {
    const std::size_t joints = doc.at("joints").get<std::size_t>();
    std::vector<DhRow> dh;
    for (const auto& row : doc.at("dh")) {
      dh.push_back({row.at("alpha").get<double>(), row.at("a").get<double>(),
                    row.at("d").get<double>(), row.value("theta_offset", 0.0)});
    }
    std::vector<JointLimit> limits;
    if (doc.contains("joint_limits")) {
      for (const auto& lim : doc.at("joint_limits")) {
        limits.push_back({lim.at(0).get<double>(), lim.at(1).get<double>()});
      }
    } else {
      limits.assign(joints, JointLimit{});
    }
    std::vector<LinkCapsule> capsules;
    for (const auto& cap : doc.value("link_capsules", nlohmann::json::array())) {
      capsules.push_back({cap.at("frame").get<std::size_t>(), read_vec3(cap, "p0"),
                          read_vec3(cap, "p1"), cap.value("radius", 0.06)});
    }
    if (dh.size() != joints) {
      throw LoadError(LoadErrorKind::kMalformed, "robot model: 'joints' disagrees with DH rows");
    }
    return RobotModel(doc.value("name", std::string("robot")), std::move(dh),
                      std::move(limits), std::move(capsules),
                      doc.value("tool_offset", 0.0),
                      doc.value("active_joints", joints));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadErrorKind::kMalformed, std::string("robot model: ") + e.what());
  } catch (const InputError& e) {
    throw LoadError(LoadErrorKind::kMalformed, std::string("robot model: ") + e.what());
  }
}

RobotModel load_robot_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadErrorKind::kIo, "cannot open robot model " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_robot_model(buffer.str());
}

std::string serialize_robot_model(const RobotModel& model) {
  nlohmann::ordered_json doc;
  doc["name"] = model.name();
  doc["joints"] = model.dof();
  doc["active_joints"] = model.active_joint_count();
  doc["tool_offset"] = model.tool_offset();
  auto& dh = doc["dh"] = nlohmann::ordered_json::array();
  for (const auto& row : model.dh_rows()) {
    dh.push_back({{"alpha", row.alpha}, {"a", row.a}, {"d", row.d},
                  {"theta_offset", row.theta_offset}});
  }
  auto& limits = doc["joint_limits"] = nlohmann::ordered_json::array();
  for (const auto& lim : model.joint_limits()) limits.push_back({lim.lo, lim.hi});
  auto& caps = doc["link_capsules"] = nlohmann::ordered_json::array();
  for (const auto& cap : model.link_capsules()) {
    caps.push_back({{"frame", cap.frame},
                    {"p0", {cap.p0.x(), cap.p0.y(), cap.p0.z()}},
                    {"p1", {cap.p1.x(), cap.p1.y(), cap.p1.z()}},
                    {"radius", cap.radius}});
  }
  return doc.dump(2) + "\n";
}

RobotModel resolve_robot_model(const std::string& reference,
                               const std::filesystem::path& base_dir) {
  if (reference.empty() || reference == "builtin:ur5e") return ur5e_model();
  std::filesystem::path path(reference);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  return load_robot_model(path);
}

}  // namespace hmp
