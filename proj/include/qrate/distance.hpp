#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qrate/normal.hpp"
#include "qrate/summation.hpp"

namespace qrate {

/// A distribution function sampled on a strictly increasing grid.
struct GridCdf {
  std::vector<double> xs;
  std::vector<double> ps;

  GridCdf(std::vector<double> xs_in, std::vector<double> ps_in)
      : xs(std::move(xs_in)), ps(std::move(ps_in)) {
    if (xs.empty() || xs.size() != ps.size()) {
      throw std::domain_error("GridCdf: grids must be non-empty and of equal length");
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(xs[i])) throw std::domain_error("GridCdf: non-finite grid point");
      if (!(ps[i] >= -1e-12 && ps[i] <= 1.0 + 1e-12)) {
        throw std::domain_error("GridCdf: probabilities must lie in [0,1]");
      }
      if (i > 0 && !(xs[i] > xs[i - 1])) {
        throw std::domain_error("GridCdf: xs must be strictly increasing");
      }
      if (i > 0 && ps[i] < ps[i - 1] - 1e-12) {
        throw std::domain_error("GridCdf: ps must be nondecreasing");
      }
    }
  }
};

/// max over grid points of |ps_i − Φ(xs_i/scale)|. A lower bound of the true
/// sup distance; the gap is bounded by the grid modulus of continuity of the
/// two curves.
inline double kolmogorov_distance(const GridCdf& law, double scale) {
  if (!(scale > 0.0)) throw std::domain_error("kolmogorov_distance: scale must be > 0");
  double d = 0.0;
  for (std::size_t i = 0; i < law.xs.size(); ++i) {
    d = std::max(d, std::fabs(law.ps[i] - std_normal_cdf(law.xs[i] / scale)));
  }
  return d;
}

/// Exact pmf of an integer count in {0, …, n}.
class CountDistribution {
 public:
  CountDistribution(std::size_t n, std::vector<double> pmf) : n_(n), pmf_(std::move(pmf)) {
    if (pmf_.size() != n_ + 1) throw std::domain_error("CountDistribution: pmf must have n+1 entries");
    CompensatedSum total;
    for (double& v : pmf_) {
      if (!(v >= -1e-15)) throw std::domain_error("CountDistribution: negative pmf entry");
      if (v < 0.0) v = 0.0;
      total.add(v);
    }
    if (std::fabs(total.value() - 1.0) > 1e-12) {
      throw std::domain_error("CountDistribution: pmf must sum to 1");
    }
  }

  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] const std::vector<double>& pmf() const { return pmf_; }

  [[nodiscard]] double mean() const {
    CompensatedSum s;
    for (std::size_t k = 0; k <= n_; ++k) s.add(static_cast<double>(k) * pmf_[k]);
    return s.value();
  }

  [[nodiscard]] double variance() const {
    const double mu = mean();
    CompensatedSum s;
    for (std::size_t k = 0; k <= n_; ++k) {
      const double d = static_cast<double>(k) - mu;
      s.add(d * d * pmf_[k]);
    }
    return s.value();
  }

  /// Raw moment E[((K − center)/scale)^r].
  [[nodiscard]] double standardized_moment(double center, double scale, int order) const {
    CompensatedSum s;
    for (std::size_t k = 0; k <= n_; ++k) {
      const double z = (static_cast<double>(k) - center) / scale;
      s.add(std::pow(z, order) * pmf_[k]);
    }
    return s.value();
  }

 private:
  std::size_t n_;
  std::vector<double> pmf_;
};

/// Exact Kolmogorov distance between an integer-lattice law and N(mu, sigma²):
/// the sup is attained at atom left/right limits, so it equals
/// max over k of max(|CDF(k) − Φ((k−mu)/σ)|, |CDF(k−1) − Φ((k−mu)/σ)|).
inline double lattice_kolmogorov_distance(const CountDistribution& law, double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("lattice_kolmogorov_distance: sigma must be > 0");
  double d = 0.0;
  CompensatedSum cdf;
  for (std::size_t k = 0; k <= law.n(); ++k) {
    const double phi = std_normal_cdf((static_cast<double>(k) - mu) / sigma);
    d = std::max(d, std::fabs(cdf.value() - phi));  // left limit at the atom
    cdf.add(law.pmf()[k]);
    d = std::max(d, std::fabs(cdf.value() - phi));
  }
  return d;
}

}  // namespace qrate
