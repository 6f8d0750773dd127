#include "hmp/stats.hpp"

#include <cmath>

namespace hmp {

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningStats::variance() const {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::stddev() const { return std::sqrt(variance()); }

RunningStats summarize(const std::vector<double>& samples) {
  RunningStats s;
  for (double x : samples) s.add(x);
  return s;
}

}  // namespace hmp
