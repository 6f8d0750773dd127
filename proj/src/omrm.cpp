#include "hmp/omrm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "hmp/distance.hpp"
#include "hmp/errors.hpp"

namespace hmp {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double index_rmse(const ConfigDatabase& db, std::span<const std::uint8_t> rec,
                  const JointVector& theta, std::size_t k) {
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double d = db.angle(j, rec[j]) - theta[static_cast<Eigen::Index>(j)];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(k));
}

}  // namespace

double rmse(const JointVector& a, const JointVector& b, std::size_t joints) {
  if (a.size() != b.size()) throw InputError("rmse: joint vectors differ in length");
  const auto n = joints == 0 ? a.size() : static_cast<Eigen::Index>(joints);
  if (n > a.size() || n == 0) throw InputError("rmse: bad joint count");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(n));
}

const char* to_string(ReconfigStatus status) {
  switch (status) {
    case ReconfigStatus::kReconfigured: return "reconfigured";
    case ReconfigStatus::kUnchanged: return "unchanged";
    case ReconfigStatus::kFailed: return "failed";
  }
  return "unknown";
}

void ReconfigRequest::validate(const RobotModel& model) const {
  if (!(safety_distance >= 0.0)) throw InputError("safety distance must be >= 0");
  if (!x_k.allFinite()) throw InputError("waypoint must be finite");
  if (static_cast<std::size_t>(theta_k.size()) != model.dof()) {
    throw InputError("theta_k length does not match the model");
  }
  hmp::validate(obstacles);
}

ReconfigResult select(const ConfigDatabase& db, const ReconfigRequest& req,
                      const RobotModel& model) {
  req.validate(model);
  if (db.build_spec().dof != model.dof()) {
    throw InputError("database and robot model disagree on joint count");
  }
  ReconfigResult result;
  const std::size_t k = db.build_spec().active_joints;

  auto t0 = Clock::now();
  const CandidateSet set = db.query(req.x_k);
  result.timing.lookup = ms_since(t0);
  result.candidate_count = set.size();
  if (set.empty()) return result;

  // RMSE from integer indices: angle = lo + i * eta, identical to dequantize.
  t0 = Clock::now();
  std::vector<double> score(set.size());
  for (std::size_t c = 0; c < set.size(); ++c) {
    score[c] = index_rmse(db, set.indices(c), req.theta_k, k);
  }
  result.timing.rmse = ms_since(t0);

  // Candidate lists are stored in lattice order, so a stable sort on the score
  // alone breaks ties by lattice order.
  t0 = Clock::now();
  std::vector<std::uint32_t> order(set.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return score[a] < score[b]; });
  result.timing.rank = ms_since(t0);

  t0 = Clock::now();
  for (std::uint32_t c : order) {
    ++result.candidates_checked;
    JointVector theta = db.dequantize(set.indices(c));
    if (!in_collision(model, theta, req.obstacles, req.safety_distance)) {
      result.theta_star = std::move(theta);
      result.rmse = score[c];
      result.status =
          score[c] == 0.0 ? ReconfigStatus::kUnchanged : ReconfigStatus::kReconfigured;
      break;
    }
  }
  result.timing.scan = ms_since(t0);
  return result;
}

std::optional<JointVector> nearest_candidate(const ConfigDatabase& db, const Vec3& x,
                                             const JointVector& theta) {
  const CandidateSet set = db.query(x);
  if (set.empty()) return std::nullopt;
  const std::size_t k = db.build_spec().active_joints;
  std::size_t best = 0;
  double best_score = index_rmse(db, set.indices(0), theta, k);
  for (std::size_t c = 1; c < set.size(); ++c) {
    const double s = index_rmse(db, set.indices(c), theta, k);
    if (s < best_score) {
      best = c;
      best_score = s;
    }
  }
  return db.dequantize(set.indices(best));
}

}  // namespace hmp
