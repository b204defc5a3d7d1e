#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "qrate/edf.hpp"
#include "qrate/model_facts.hpp"
#include "qrate/normal.hpp"
#include "qrate/process.hpp"
#include "qrate/summation.hpp"

namespace qrate {

/// Silverman's rule of thumb, 0.9·min(sd, iqr/1.34)·n^{-1/5}.
inline double silverman_bandwidth(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 2) throw std::domain_error("silverman_bandwidth: need n >= 2");
  CompensatedSum sum;
  for (double v : sample) sum.add(v);
  const double mean = sum.value() / static_cast<double>(n);
  CompensatedSum ss;
  for (double v : sample) ss.add((v - mean) * (v - mean));
  const double sd = std::sqrt(ss.value() / static_cast<double>(n - 1));

  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const Edf edf(sorted);
  const double iqr = sample_quantile(edf, 0.75) - sample_quantile(edf, 0.25);

  const double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) {
    throw std::domain_error("silverman_bandwidth: zero sample spread");
  }
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

/// Gaussian-kernel density estimate (1/(nh)) Σ φ((y − X_i)/h).
inline double kde_at(std::span<const double> sample, double y,
                     std::optional<double> bandwidth = std::nullopt) {
  if (sample.empty()) throw std::domain_error("kde_at: empty sample");
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(sample);
  if (!(h > 0.0)) throw std::domain_error("kde_at: bandwidth must be > 0");
  CompensatedSum acc;
  for (double v : sample) acc.add(std_normal_pdf((y - v) / h));
  return acc.value() / (static_cast<double>(sample.size()) * h);
}

struct LongRunVariance {
  double value = 0.0;
  bool clipped = false;
  std::size_t lags = 0;
};

/// Bartlett lag-window estimate of the long-run variance of the centered
/// indicator process I(X_i ≤ y) − F_n(y):
///   γ̂_0 + 2 Σ_{k=1}^{b} (1 − k/(b+1)) γ̂_k,  auto b = ⌈1.3 n^{1/3}⌉.
/// Negative estimates are clipped to zero and flagged, never thrown.
inline LongRunVariance indicator_longrun_variance(std::span<const double> sample, double y,
                                                  std::optional<std::size_t> bandwidth_lags =
                                                      std::nullopt) {
  const std::size_t n = sample.size();
  if (n < 8) throw std::domain_error("indicator_longrun_variance: need n >= 8");
  std::size_t b = bandwidth_lags
                      ? *bandwidth_lags
                      : static_cast<std::size_t>(
                            std::ceil(1.3 * std::cbrt(static_cast<double>(n))));
  b = std::min(b, n - 1);

  std::vector<double> c(n);
  CompensatedSum mean;
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = sample[i] <= y ? 1.0 : 0.0;
    mean.add(c[i]);
  }
  const double mu = mean.value() / static_cast<double>(n);
  for (double& v : c) v -= mu;

  const auto gamma = [&](std::size_t k) {
    CompensatedSum acc;
    for (std::size_t i = 0; i + k < n; ++i) acc.add(c[i] * c[i + k]);
    return acc.value() / static_cast<double>(n);
  };

  double value = gamma(0);
  for (std::size_t k = 1; k <= b; ++k) {
    const double w = 1.0 - static_cast<double>(k) / static_cast<double>(b + 1);
    value += 2.0 * w * gamma(k);
  }
  LongRunVariance out;
  out.lags = b;
  if (value < 0.0) {
    out.value = 0.0;
    out.clipped = true;
  } else {
    out.value = value;
  }
  return out;
}

/// Point estimate with plug-in variance components and a normal CI.
struct QuantileEstimate {
  double point = 0.0;
  double f_hat = 0.0;
  double sigma2_hat = 0.0;
  double tau2_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double level = 0.0;
  std::size_t n = 0;
  bool plug_in = true;      // false when analytic ModelFacts supplied the variance
  double bandwidth = 0.0;   // plug-in path only
  std::size_t lags = 0;     // plug-in path only
};

struct EstimateOptions {
  std::optional<double> bandwidth;
  std::optional<std::size_t> lags;
  /// When set, the CI uses the analytic τ²∞ from the facts instead of the
  /// plug-in estimate; the two paths are never mixed.
  const ModelFacts* facts = nullptr;
};

inline QuantileEstimate estimate_quantile_ci(const TimeSeries& sample, double p, double level,
                                             const EstimateOptions& options = {}) {
  const std::size_t n = sample.values.size();
  if (n < 16) throw std::domain_error("estimate_quantile_ci: need n >= 16");
  if (!(p > 0.0 && p < 1.0) || !(level > 0.0 && level < 1.0)) {
    throw std::domain_error("estimate_quantile_ci: p and level must lie in (0,1)");
  }

  const Edf edf(sample.values);
  QuantileEstimate est;
  est.point = sample_quantile(edf, p);
  est.level = level;
  est.n = n;

  if (options.facts != nullptr) {
    const ModelFacts& facts = *options.facts;
    if (!facts.tau2_inf) {
      throw std::domain_error("estimate_quantile_ci: analytic facts lack tau2 (c1 fails)");
    }
    est.plug_in = false;
    est.f_hat = facts.density_at_xi.value_or(0.0);
    est.sigma2_hat = facts.sigma2_inf;
    est.tau2_hat = *facts.tau2_inf;
  } else {
    est.bandwidth = options.bandwidth ? *options.bandwidth : silverman_bandwidth(sample.values);
    est.f_hat = kde_at(sample.values, est.point, est.bandwidth);
    const LongRunVariance lrv = indicator_longrun_variance(sample.values, est.point, options.lags);
    est.sigma2_hat = lrv.value;
    est.lags = lrv.lags;
    if (!(est.f_hat > 0.0) || lrv.clipped || !(est.sigma2_hat > 0.0)) {
      std::ostringstream msg;
      msg << "variance plug-in failed: f_hat=" << est.f_hat << " sigma2_hat=" << est.sigma2_hat
          << (lrv.clipped ? " (clipped)" : "") << " n=" << n << " bandwidth=" << est.bandwidth
          << " lags=" << lrv.lags;
      throw std::domain_error(msg.str());
    }
    est.tau2_hat = est.sigma2_hat / (est.f_hat * est.f_hat);
  }

  const double z = std_normal_quantile(0.5 * (1.0 + level));
  const double half = z * std::sqrt(est.tau2_hat / static_cast<double>(n));
  est.ci_lo = est.point - half;
  est.ci_hi = est.point + half;
  return est;
}

/// √n(ξ̂_n − ξ_p)/τ∞ with the analytic truth — the exact quantity whose law
/// the Berry–Esseen bound controls.
inline double normalized_statistic(const TimeSeries& sample, const ModelFacts& facts, double p) {
  if (!facts.tau2_inf || !(*facts.tau2_inf > 0.0)) {
    throw std::domain_error("normalized_statistic: facts.tau2_inf must be positive");
  }
  const Edf edf(sample.values);
  const double xi_hat = sample_quantile(edf, p);
  return std::sqrt(static_cast<double>(sample.values.size())) * (xi_hat - facts.xi_p) /
         std::sqrt(*facts.tau2_inf);
}

}  // namespace qrate
