#pragma once

#include <vector>

#include <Eigen/Core>

namespace hmp {

using Vec3 = Eigen::Vector3d;

/// Swept sphere around the segment p0-p1. p0 == p1 is a sphere.
struct Capsule {
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.0;
};

/// Axis-aligned box given by its center and half extents (all > 0).
struct BoxObstacle {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Zero();

  Vec3 lo() const { return center - half_extents; }
  Vec3 hi() const { return center + half_extents; }
};

/// Obstacle snapshot for one instant. Every primitive is grown by `inflation`
/// before distances are measured.
struct ObstacleSet {
  std::vector<Capsule> capsules;
  std::vector<BoxObstacle> boxes;
  double inflation = 0.0;

  bool empty() const { return capsules.empty() && boxes.empty(); }
};

/// Throws InputError on non-positive radius/extents or negative inflation.
void validate(const Capsule& capsule);
void validate(const BoxObstacle& box);
void validate(const ObstacleSet& obstacles);

}  // namespace hmp
