#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qrate/normal.hpp"

namespace qrate {

struct SpectralCheckReport {
  double min_value = 0.0;
  double argmin_lambda = 0.0;
  std::size_t grid_size = 0;
  bool pass = false;
};

/// Minimum of a spectral density over the grid λ_j = −π + 2πj/G, j = 1..G
/// (half-open at −π, includes π, and includes 0 for even G). Pass means the
/// grid minimum is strictly positive; smoothness is not examined.
template <class F>
SpectralCheckReport spectral_density_positivity_check(F&& density, std::size_t grid_size) {
  if (grid_size < 2) throw std::domain_error("spectral check: grid_size must be >= 2");
  SpectralCheckReport report;
  report.grid_size = grid_size;
  report.min_value = std::numeric_limits<double>::infinity();
  const double pi = kTwoPi / 2.0;
  for (std::size_t j = 1; j <= grid_size; ++j) {
    const double lambda = -pi + kTwoPi * static_cast<double>(j) / static_cast<double>(grid_size);
    const double v = density(lambda);
    if (!std::isfinite(v)) throw std::domain_error("spectral check: non-finite density value");
    if (v < report.min_value) {
      report.min_value = v;
      report.argmin_lambda = lambda;
    }
  }
  report.pass = report.min_value > 0.0;
  return report;
}

/// Spectral density of the normalized MA process, |Σ_j θ_j e^{ijλ}|² / (2π).
inline double ma_spectral_density(const std::vector<double>& theta, double lambda) {
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    re += theta[j] * std::cos(lambda * static_cast<double>(j));
    im += theta[j] * std::sin(lambda * static_cast<double>(j));
  }
  return (re * re + im * im) / kTwoPi;
}

}  // namespace qrate
