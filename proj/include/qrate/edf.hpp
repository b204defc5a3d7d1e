#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qrate {

/// Empirical distribution function of a sample; evaluation is the exact count
/// ratio #{i : x_i ≤ x}/n, right-continuous and closed on the right.
class Edf {
 public:
  explicit Edf(std::vector<double> sample) : sorted_(std::move(sample)) {
    if (sorted_.empty()) throw std::domain_error("Edf: sample must be non-empty");
    for (double v : sorted_) {
      if (!std::isfinite(v)) throw std::domain_error("Edf: sample values must be finite");
    }
    std::sort(sorted_.begin(), sorted_.end());
  }

  [[nodiscard]] const std::vector<double>& sorted() const { return sorted_; }
  [[nodiscard]] std::size_t n() const { return sorted_.size(); }

  /// #{i : x_i ≤ x}.
  [[nodiscard]] std::size_t count_at_most(double x) const {
    return static_cast<std::size_t>(
        std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin());
  }

 private:
  std::vector<double> sorted_;
};

inline double edf_eval(const Edf& edf, double x) {
  return static_cast<double>(edf.count_at_most(x)) / static_cast<double>(edf.n());
}

/// Smallest integer k ≥ n·p, with n·p treated as integral when the floating
/// product sits within relative 1e-9 of an integer (ties resolved downward,
/// matching the inf-definition of the quantile). Result lies in [1, n] for
/// p in (0,1).
inline std::size_t quantile_order_index(std::size_t n, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile_order_index: p must lie in (0,1)");
  const double t = static_cast<double>(n) * p;
  const double fl = std::floor(t);
  double k = (fl >= 1.0 && (t - fl) <= 1e-9 * t) ? fl : fl + 1.0;
  if (k > static_cast<double>(n)) k = static_cast<double>(n);
  return static_cast<std::size_t>(k);
}

/// Sample p-quantile: the ⌈np⌉-th order statistic, i.e. inf{x : F_n(x) ≥ p}.
inline double sample_quantile(const Edf& edf, double p) {
  const std::size_t k = quantile_order_index(edf.n(), p);
  return edf.sorted()[k - 1];
}

}  // namespace qrate
