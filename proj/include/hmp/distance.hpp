#pragma once

#include <limits>
#include <vector>

#include "hmp/robot_model.hpp"
#include "hmp/shapes.hpp"

namespace hmp {

/// Returned by min_distance when there is nothing to collide with.
inline constexpr double kNoObstacleDistance = std::numeric_limits<double>::infinity();

/// Exact minimum Euclidean distance between the closed segments a0-a1 and b0-b1.
/// Symmetric in its two segments bit-for-bit.
double segment_segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                const Vec3& b1);

double point_segment_distance(const Vec3& p, const Vec3& s0, const Vec3& s1);

/// Zero for points inside the box.
double point_box_distance(const Vec3& p, const BoxObstacle& box);

/// Exact distance between a segment and a solid axis-aligned box.
double segment_box_distance(const Vec3& s0, const Vec3& s1, const BoxObstacle& box);

/// Axis distance minus both radii; negative values mean overlap and are a lower
/// bound on the penetration depth, not the depth itself.
double capsule_capsule_distance(const Capsule& a, const Capsule& b);

/// Axis-to-box distance minus the radius; negative on overlap.
double capsule_box_distance(const Capsule& c, const BoxObstacle& box);

/// Minimum over every body capsule x obstacle primitive, each obstacle grown by
/// obstacles.inflation. kNoObstacleDistance for an empty obstacle set.
double min_distance(const std::vector<Capsule>& body, const ObstacleSet& obstacles);

/// Distance between the arm at theta and the obstacles.
double arm_obstacle_distance(const RobotModel& model, const JointVector& theta,
                             const ObstacleSet& obstacles);

/// True iff the arm's min_distance to the obstacles is <= safety_distance.
bool in_collision(const RobotModel& model, const JointVector& theta,
                  const ObstacleSet& obstacles, double safety_distance);

}  // namespace hmp
