#pragma once

#include <cmath>

namespace qrate {

/// Neumaier-compensated accumulator. Used wherever long sums must not drift
/// (DP row sums, Monte Carlo means, pmf totals).
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace qrate
