#include "hmp/distance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include "hmp/errors.hpp"
#include "hmp/kinematics.hpp"

namespace hmp {

void validate(const Capsule& capsule) {
  if (!(capsule.radius > 0.0)) throw InputError("capsule radius must be > 0");
}

void validate(const BoxObstacle& box) {
  if (!(box.half_extents.array() > 0.0).all()) {
    throw InputError("box half extents must all be > 0");
  }
}

void validate(const ObstacleSet& obstacles) {
  if (!(obstacles.inflation >= 0.0)) throw InputError("obstacle inflation must be >= 0");
  for (const auto& c : obstacles.capsules) validate(c);
  for (const auto& b : obstacles.boxes) validate(b);
}

namespace {

bool lexicographically_less(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
  const auto key = [](const Vec3& p, const Vec3& q) {
    return std::make_tuple(p.x(), p.y(), p.z(), q.x(), q.y(), q.z());
  };
  return key(a0, a1) < key(b0, b1);
}

// Closest points between segments (Ericson, Real-Time Collision Detection 5.1.9).
double ordered_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                                const Vec3& q2) {
  const Vec3 d1 = q1 - p1;
  const Vec3 d2 = q2 - p2;
  const Vec3 r = p1 - p2;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  constexpr double kEps = 1e-300;

  double s = 0.0;
  double t = 0.0;
  if (a <= kEps && e <= kEps) return r.norm();
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  const Vec3 c1 = p1 + d1 * s;
  const Vec3 c2 = p2 + d2 * t;
  return (c1 - c2).norm();
}

}  // namespace

double segment_segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                const Vec3& b1) {
  if (lexicographically_less(b0, b1, a0, a1)) return ordered_segment_distance(b0, b1, a0, a1);
  return ordered_segment_distance(a0, a1, b0, b1);
}

double point_segment_distance(const Vec3& p, const Vec3& s0, const Vec3& s1) {
  const Vec3 d = s1 - s0;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - s0).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (s0 + t * d - p).norm();
}

double point_box_distance(const Vec3& p, const BoxObstacle& box) {
  const Vec3 outside = ((box.lo() - p).cwiseMax(p - box.hi())).cwiseMax(0.0);
  return outside.norm();
}

double segment_box_distance(const Vec3& s0, const Vec3& s1, const BoxObstacle& box) {
  // The squared distance along the segment is piecewise quadratic in t, with
  // breaks where the point crosses a slab plane; minimize each piece exactly.
  const Vec3 d = s1 - s0;
  const Vec3 lo = box.lo();
  const Vec3 hi = box.hi();

  std::array<double, 8> breaks{};
  std::size_t n = 0;
  breaks[n++] = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) continue;
    for (double plane : {lo[k], hi[k]}) {
      const double t = (plane - s0[k]) / d[k];
      if (t > 0.0 && t < 1.0) breaks[n++] = t;
    }
  }
  breaks[n++] = 1.0;
  std::sort(breaks.begin(), breaks.begin() + static_cast<std::ptrdiff_t>(n));

  double best = std::min(point_box_distance(s0, box), point_box_distance(s1, box));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double t0 = breaks[i];
    const double t1 = breaks[i + 1];
    if (!(t1 > t0)) continue;
    const Vec3 mid = s0 + 0.5 * (t0 + t1) * d;
    // sqdist(t) = sum over outside axes of (offset_k + d_k t)^2
    double qa = 0.0;
    double qb = 0.0;
    for (int k = 0; k < 3; ++k) {
      double offset = 0.0;
      if (mid[k] < lo[k]) {
        offset = s0[k] - lo[k];
      } else if (mid[k] > hi[k]) {
        offset = s0[k] - hi[k];
      } else {
        continue;
      }
      qa += d[k] * d[k];
      qb += 2.0 * offset * d[k];
    }
    double t = t0;
    if (qa > 0.0) t = std::clamp(-qb / (2.0 * qa), t0, t1);
    best = std::min(best, point_box_distance(s0 + t * d, box));
  }
  return best;
}

double capsule_capsule_distance(const Capsule& a, const Capsule& b) {
  return segment_segment_distance(a.p0, a.p1, b.p0, b.p1) - (a.radius + b.radius);
}

double capsule_box_distance(const Capsule& c, const BoxObstacle& box) {
  return segment_box_distance(c.p0, c.p1, box) - c.radius;
}

double min_distance(const std::vector<Capsule>& body, const ObstacleSet& obstacles) {
  double best = kNoObstacleDistance;
  for (const auto& link : body) {
    for (const auto& cap : obstacles.capsules) {
      const Capsule grown{cap.p0, cap.p1, cap.radius + obstacles.inflation};
      best = std::min(best, capsule_capsule_distance(link, grown));
    }
    for (const auto& box : obstacles.boxes) {
      best = std::min(best, capsule_box_distance(link, box) - obstacles.inflation);
    }
  }
  return best;
}

double arm_obstacle_distance(const RobotModel& model, const JointVector& theta,
                             const ObstacleSet& obstacles) {
  if (obstacles.empty()) {
    model.check(theta);
    return kNoObstacleDistance;
  }
  return min_distance(link_occupancy(model, theta), obstacles);
}

bool in_collision(const RobotModel& model, const JointVector& theta,
                  const ObstacleSet& obstacles, double safety_distance) {
  return arm_obstacle_distance(model, theta, obstacles) <= safety_distance;
}

}  // namespace hmp
