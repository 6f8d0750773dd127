#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hmp/shapes.hpp"

namespace hmp {

/// One manipulator configuration, radians, one entry per joint.
using JointVector = Eigen::VectorXd;

/// Standard Denavit-Hartenberg row. The commanded joint angle is added to
/// theta_offset to form the rotation about the previous z axis.
struct DhRow {
  double alpha = 0.0;
  double a = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
};

struct JointLimit {
  double lo = -3.14159265358979323846;
  double hi = 3.14159265358979323846;
};

/// Collision capsule rigidly attached to one kinematic frame. Frame 0 is the
/// base, frame i is the frame after joint i, and the last frame includes the
/// tool offset.
struct LinkCapsule {
  std::size_t frame = 0;
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.06;
};

class RobotModel {
 public:
  RobotModel(std::string name, std::vector<DhRow> dh_rows,
             std::vector<JointLimit> joint_limits,
             std::vector<LinkCapsule> link_capsules, double tool_offset,
             std::size_t active_joint_count);

  const std::string& name() const { return name_; }
  std::size_t dof() const { return dh_rows_.size(); }
  std::size_t active_joint_count() const { return active_joint_count_; }
  const std::vector<DhRow>& dh_rows() const { return dh_rows_; }
  const std::vector<JointLimit>& joint_limits() const { return joint_limits_; }
  const std::vector<LinkCapsule>& link_capsules() const { return link_capsules_; }
  /// Fixed translation along the last frame's z axis (gripper length).
  double tool_offset() const { return tool_offset_; }

  /// Upper bound on |F(theta)|: sum of |a_i| + |d_i| plus the tool.
  double reach() const;

  bool within_limits(const JointVector& theta) const;
  /// Throws InputError on length mismatch, PreconditionError on limit violation.
  void check(const JointVector& theta) const;
  JointVector clamp(const JointVector& theta) const;
  JointVector zero_configuration() const { return JointVector::Zero(dof()); }

  /// Stable 64-bit digest of the kinematic parameters; databases record it.
  std::uint64_t fingerprint() const;

 private:
  std::string name_;
  std::vector<DhRow> dh_rows_;
  std::vector<JointLimit> joint_limits_;
  std::vector<LinkCapsule> link_capsules_;
  double tool_offset_;
  std::size_t active_joint_count_;
};

/// UR5e with the manufacturer DH table, expressed in the controller's "base"
/// frame (rotated by pi about z from the DH base), a 17 mm gripper offset and
/// conservative link capsules.
RobotModel ur5e_model();

RobotModel load_robot_model(const std::filesystem::path& path);
RobotModel parse_robot_model(const std::string& json_text);
std::string serialize_robot_model(const RobotModel& model);

/// Resolves "builtin:ur5e" or a file path.
RobotModel resolve_robot_model(const std::string& reference,
                               const std::filesystem::path& base_dir = {});

}  // namespace hmp
