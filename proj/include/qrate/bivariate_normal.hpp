#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qrate/normal.hpp"

namespace qrate {
namespace detail {

template <class F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double err = left + right - whole;
  if (depth <= 0 || std::fabs(err) <= 15.0 * tol) {
    return left + right + err / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, int depth = 48) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace detail

/// Standard bivariate normal CDF P(Z1 ≤ h, Z2 ≤ k) at correlation rho.
///
/// Uses the single-integral reduction over the correlation parameter with the
/// substitution r = sin θ, which removes the endpoint singularity:
///   Φ2(h,k;ρ) = Φ(h)Φ(k) + (1/2π) ∫_0^{asin ρ} exp(−(h²−2hk·sinθ+k²)/(2cos²θ)) dθ.
/// Absolute error ≤ 1e-10. The comonotone limit |rho| → 1 is excluded and must
/// be handled analytically by the caller.
inline double bivariate_normal_cdf(double h, double k, double rho) {
  if (!std::isfinite(h) || !std::isfinite(k)) {
    throw std::domain_error("bivariate_normal_cdf: non-finite argument");
  }
  if (!(std::fabs(rho) <= 1.0 - 1e-12)) {
    throw std::domain_error("bivariate_normal_cdf: |rho| must be <= 1 - 1e-12");
  }

  const double ph = std_normal_cdf(h);
  const double pk = std_normal_cdf(k);
  double value = ph * pk;
  if (rho != 0.0) {
    const auto integrand = [h, k](double theta) {
      const double c = std::cos(theta);
      return std::exp(-(h * h - 2.0 * h * k * std::sin(theta) + k * k) / (2.0 * c * c));
    };
    value += detail::adaptive_simpson(integrand, 0.0, std::asin(rho), 1e-13) / kTwoPi;
  }

  const double lo = std::max(0.0, ph + pk - 1.0);
  const double hi = std::min(ph, pk);
  return std::clamp(value, lo, hi);
}

}  // namespace qrate
