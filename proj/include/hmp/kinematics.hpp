#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "hmp/robot_model.hpp"
#include "hmp/shapes.hpp"

namespace hmp {

/// Rigid transform with an orthonormal rotation block.
using HomogeneousTransform = Eigen::Isometry3d;

/// Standard DH link transform Rz(theta) Tz(d) Tx(a) Rx(alpha) with
/// theta = joint_angle + row.theta_offset.
HomogeneousTransform dh_transform(const DhRow& row, double joint_angle);

struct ForwardKinematicsResult {
  Vec3 end_effector_position;
  /// dof()+1 cumulative frames: base first, last one includes the tool offset.
  std::vector<HomogeneousTransform> joint_frames;
};

ForwardKinematicsResult forward_kinematics(const RobotModel& model, const JointVector& theta);

/// Position only; skips the frame list. Same precondition as forward_kinematics.
Vec3 end_effector_position(const RobotModel& model, const JointVector& theta);

/// Geometric 3 x dof Jacobian of the end-effector position:
/// column i = z_{i-1} x (p_e - p_{i-1}).
Eigen::Matrix3Xd positional_jacobian(const RobotModel& model, const JointVector& theta);

constexpr double kDefaultDamping = 1e-3;

/// One damped least-squares step toward x_target over the active joints:
/// theta + J^T (J J^T + damping^2 I)^-1 (x_target - F(theta)), clamped to limits.
/// Throws SingularityError if the step is not finite.
JointVector ik_step(const RobotModel& model, const JointVector& theta_prev,
                    const Vec3& x_target, double damping = kDefaultDamping);

/// Repeats ik_step until the position error drops below `tolerance` or
/// `max_iterations` steps have been taken.
JointVector ik_solve(const RobotModel& model, const JointVector& theta_start,
                     const Vec3& x_target, int max_iterations, double tolerance,
                     double damping = kDefaultDamping);

/// World-frame capsules occupied by the arm at theta (one per link capsule).
std::vector<Capsule> link_occupancy(const RobotModel& model, const JointVector& theta);

}  // namespace hmp
