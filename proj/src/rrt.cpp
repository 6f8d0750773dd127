#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "hmp/distance.hpp"
#include "hmp/errors.hpp"
#include "hmp/kinematics.hpp"
#include "hmp/omrm.hpp"

namespace hmp {
namespace {

struct Node {
  JointVector theta;
  Vec3 tip;
  int parent = -1;
};

double active_distance(const JointVector& a, const JointVector& b, Eigen::Index k) {
  return (a.head(k) - b.head(k)).norm();
}

// Checks the open edge (from, to] at the given joint-space resolution.
bool edge_free(const RobotModel& model, const JointVector& from, const JointVector& to,
               const ObstacleSet& obstacles, double safety, double resolution) {
  const double len = (to - from).norm();
  const int pieces = std::max(1, static_cast<int>(std::ceil(len / resolution)));
  for (int i = 1; i <= pieces; ++i) {
    const double t = static_cast<double>(i) / pieces;
    const JointVector q = from + t * (to - from);
    if (in_collision(model, q, obstacles, safety)) return false;
  }
  return true;
}

}  // namespace

RrtResult fallback_rrt(const RobotModel& model, const JointVector& theta_start,
                       const Vec3& x_goal, const ObstacleSet& obstacles, double safety,
                       std::uint64_t seed, const RrtParams& params) {
  model.check(theta_start);
  if (!x_goal.allFinite()) throw InputError("rrt goal must be finite");
  if (!(params.step > 0.0) || !(params.edge_resolution > 0.0) || !(params.goal_tolerance > 0.0)) {
    throw InputError("rrt step, resolution and tolerance must be > 0");
  }
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(params.budget_seconds);
  const auto k = static_cast<Eigen::Index>(model.active_joint_count());

  RrtResult result;
  std::vector<Node> tree;
  tree.push_back({theta_start, end_effector_position(model, theta_start), -1});
  std::size_t best = 0;
  double best_gap = (tree[0].tip - x_goal).norm();

  auto finish = [&](std::size_t leaf) {
    result.success = true;
    for (int i = static_cast<int>(leaf); i >= 0; i = tree[i].parent) {
      result.path.push_back(tree[i].theta);
    }
    std::reverse(result.path.begin(), result.path.end());
  };

  if (best_gap <= params.goal_tolerance) {
    finish(0);
    result.tree_size = 1;
    return result;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& limits = model.joint_limits();

  while (result.iterations < params.max_iterations &&
         std::chrono::steady_clock::now() < deadline) {
    ++result.iterations;
    std::size_t near = 0;
    JointVector next;
    if (unit(rng) < params.goal_bias) {
      near = best;
      const JointVector& from = tree[near].theta;
      JointVector stepped;
      try {
        stepped = ik_step(model, from, x_goal);
      } catch (const SingularityError&) {
        continue;
      }
      JointVector delta = stepped - from;
      const double len = delta.head(k).norm();
      if (len == 0.0) continue;
      if (len > params.step) delta *= params.step / len;
      next = from + delta;
    } else {
      JointVector sample = theta_start;
      for (Eigen::Index j = 0; j < k; ++j) {
        sample[j] = limits[j].lo + unit(rng) * (limits[j].hi - limits[j].lo);
      }
      double nearest = active_distance(tree[0].theta, sample, k);
      for (std::size_t i = 1; i < tree.size(); ++i) {
        const double d = active_distance(tree[i].theta, sample, k);
        if (d < nearest) {
          nearest = d;
          near = i;
        }
      }
      if (nearest == 0.0) continue;
      const JointVector& from = tree[near].theta;
      next = nearest <= params.step ? sample : JointVector(from + (sample - from) * (params.step / nearest));
    }
    next = model.clamp(next);
    if (!edge_free(model, tree[near].theta, next, obstacles, safety, params.edge_resolution)) {
      continue;
    }
    const Vec3 tip = end_effector_position(model, next);
    tree.push_back({next, tip, static_cast<int>(near)});
    const double gap = (tip - x_goal).norm();
    if (gap < best_gap) {
      best_gap = gap;
      best = tree.size() - 1;
    }
    if (gap <= params.goal_tolerance) {
      finish(tree.size() - 1);
      break;
    }
  }
  result.tree_size = tree.size();
  return result;
}

}  // namespace hmp
