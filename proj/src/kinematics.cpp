#include "hmp/kinematics.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "hmp/errors.hpp"

namespace hmp {

HomogeneousTransform dh_transform(const DhRow& row, double joint_angle) {
  const double theta = joint_angle + row.theta_offset;
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double ca = std::cos(row.alpha);
  const double sa = std::sin(row.alpha);

  HomogeneousTransform t = HomogeneousTransform::Identity();
  auto& m = t.matrix();
  m(0, 0) = ct;
  m(0, 1) = -st * ca;
  m(0, 2) = st * sa;
  m(0, 3) = row.a * ct;
  m(1, 0) = st;
  m(1, 1) = ct * ca;
  m(1, 2) = -ct * sa;
  m(1, 3) = row.a * st;
  m(2, 0) = 0.0;
  m(2, 1) = sa;
  m(2, 2) = ca;
  m(2, 3) = row.d;
  return t;
}

namespace {

HomogeneousTransform tool_transform(const RobotModel& model) {
  HomogeneousTransform t = HomogeneousTransform::Identity();
  t.translation() = Vec3(0.0, 0.0, model.tool_offset());
  return t;
}

}  // namespace

ForwardKinematicsResult forward_kinematics(const RobotModel& model, const JointVector& theta) {
  model.check(theta);
  const std::size_t q = model.dof();
  ForwardKinematicsResult out;
  out.joint_frames.reserve(q + 1);
  out.joint_frames.push_back(HomogeneousTransform::Identity());
  HomogeneousTransform acc = HomogeneousTransform::Identity();
  for (std::size_t i = 0; i < q; ++i) {
    acc = acc * dh_transform(model.dh_rows()[i], theta[static_cast<Eigen::Index>(i)]);
    if (i + 1 == q) acc = acc * tool_transform(model);
    out.joint_frames.push_back(acc);
  }
  out.end_effector_position = acc.translation();
  return out;
}

Vec3 end_effector_position(const RobotModel& model, const JointVector& theta) {
  model.check(theta);
  HomogeneousTransform acc = HomogeneousTransform::Identity();
  for (std::size_t i = 0; i < model.dof(); ++i) {
    acc = acc * dh_transform(model.dh_rows()[i], theta[static_cast<Eigen::Index>(i)]);
  }
  return acc * Vec3(0.0, 0.0, model.tool_offset());
}

Eigen::Matrix3Xd positional_jacobian(const RobotModel& model, const JointVector& theta) {
  const auto fk = forward_kinematics(model, theta);
  const std::size_t q = model.dof();
  Eigen::Matrix3Xd jac(3, static_cast<Eigen::Index>(q));
  const Vec3& pe = fk.end_effector_position;
  for (std::size_t i = 0; i < q; ++i) {
    const auto& frame = fk.joint_frames[i];
    const Vec3 z = frame.linear().col(2);
    jac.col(static_cast<Eigen::Index>(i)) = z.cross(pe - frame.translation());
  }
  return jac;
}

JointVector ik_step(const RobotModel& model, const JointVector& theta_prev,
                    const Vec3& x_target, double damping) {
  if (!(damping > 0.0)) throw ParameterError("damping must be > 0");
  const Vec3 error = x_target - end_effector_position(model, theta_prev);
  if (error.isZero(0.0)) return theta_prev;

  const auto active = static_cast<Eigen::Index>(model.active_joint_count());
  const Eigen::Matrix3Xd jac = positional_jacobian(model, theta_prev).leftCols(active);
  const Eigen::Matrix3d jjt =
      jac * jac.transpose() + damping * damping * Eigen::Matrix3d::Identity();
  const Eigen::VectorXd delta = jac.transpose() * jjt.ldlt().solve(error);
  if (!delta.allFinite()) {
    throw SingularityError("damped pseudo-inverse produced a non-finite step");
  }
  JointVector next = theta_prev;
  next.head(active) += delta;
  return model.clamp(next);
}

JointVector ik_solve(const RobotModel& model, const JointVector& theta_start,
                     const Vec3& x_target, int max_iterations, double tolerance,
                     double damping) {
  JointVector theta = theta_start;
  for (int it = 0; it < max_iterations; ++it) {
    if ((end_effector_position(model, theta) - x_target).norm() < tolerance) break;
    theta = ik_step(model, theta, x_target, damping);
  }
  return theta;
}

std::vector<Capsule> link_occupancy(const RobotModel& model, const JointVector& theta) {
  const auto fk = forward_kinematics(model, theta);
  std::vector<Capsule> out;
  out.reserve(model.link_capsules().size());
  for (const auto& link : model.link_capsules()) {
    const auto& frame = fk.joint_frames[link.frame];
    out.push_back({frame * link.p0, frame * link.p1, link.radius});
  }
  return out;
}

}  // namespace hmp
