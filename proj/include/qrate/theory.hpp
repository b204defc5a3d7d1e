#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrate/markov.hpp"
#include "qrate/oracles.hpp"

namespace qrate {

/// |Ψ_a(t)| = |a·e^{it} + 1 − a| = √(1 − 4a(1−a)·sin²(t/2)), the modulus of
/// the Bernoulli(a) characteristic function. 2π-periodic, in [0,1].
inline double psi_modulus(double a, double t) {
  if (!(a >= 0.0 && a <= 1.0)) throw std::domain_error("psi_modulus: a must lie in [0,1]");
  const double s = std::sin(0.5 * t);
  return std::sqrt(std::max(0.0, 1.0 - 4.0 * a * (1.0 - a) * s * s));
}

/// Exact instantiation of the conditional-CF bound: for every y in a window
/// around the quantile and every t,
///   E|E{exp(itI(X_1 ≤ y)) | C}|  ≤  1 − (1 − |Ψ_ε(t)|)·δ̂,
/// where δ̂ is the infimum over the window of the exactly computed
/// P(ε < G_0(y) < 1−ε). Margins are bound minus value; they are nonnegative
/// whenever δ̂ > 0, up to rounding.
struct ConditionalCfBoundReport {
  double epsilon = 0.0;
  double delta_hat = 0.0;
  double xi_p = 0.0;
  double g_at_xi = 0.0;
  std::vector<double> y_grid;
  std::vector<double> t_grid;
  std::vector<std::vector<double>> value;    // [y][t] = E|E(exp(itI)|C)|
  std::vector<std::vector<double>> margins;  // [y][t] = bound − value
  double min_margin = 0.0;
};

inline ConditionalCfBoundReport conditional_cf_bound_check(const FiniteMarkov& chain, double p, double epsilon,
                                   double window_halfwidth, std::vector<double> t_grid) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("conditional_cf_bound_check: p must lie in (0,1)");
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw std::domain_error("conditional_cf_bound_check: epsilon must lie in (0, 1/2)");
  }
  if (!(window_halfwidth > 0.0)) {
    throw std::domain_error("conditional_cf_bound_check: window_halfwidth must be > 0");
  }
  if (t_grid.empty()) throw std::domain_error("conditional_cf_bound_check: empty t grid");

  const std::vector<double> nu = chain.stationary();
  ConditionalCfBoundReport report;
  report.epsilon = epsilon;
  report.t_grid = std::move(t_grid);
  report.xi_p = markov_marginal_quantile(chain, nu, p);

  const DegeneracyReport c5 = degeneracy_probability(chain, report.xi_p);
  report.g_at_xi = c5.g;
  if (!(c5.g < p)) {
    throw std::domain_error(
        "conditional_cf_bound_check: degeneracy hypothesis violated, g(xi_p) = " +
        std::to_string(c5.g) + " >= p = " + std::to_string(p));
  }

  for (double v : chain.values) {
    if (std::fabs(v - report.xi_p) <= window_halfwidth) report.y_grid.push_back(v);
  }

  const ConditionalLaw law = conditional_law(chain);
  std::vector<std::vector<double>> g_per_y(report.y_grid.size());
  double delta_hat = 1.0;
  for (std::size_t yi = 0; yi < report.y_grid.size(); ++yi) {
    const double y = report.y_grid[yi];
    double p_a3 = 0.0;
    g_per_y[yi].reserve(law.pairs.size());
    for (const auto& pair : law.pairs) {
      const double g = ConditionalLaw::mass_at_most(pair, law.values, y);
      g_per_y[yi].push_back(g);
      if (g > epsilon && g < 1.0 - epsilon) p_a3 += pair.weight;
    }
    delta_hat = std::min(delta_hat, p_a3);
  }
  report.delta_hat = delta_hat;
  if (!(delta_hat > 0.0)) {
    throw std::domain_error(
        "conditional_cf_bound_check: P(eps < G0 < 1-eps) vanishes somewhere in the window; "
        "choose a smaller epsilon or window");
  }

  report.value.assign(report.y_grid.size(), std::vector<double>(report.t_grid.size(), 0.0));
  report.margins = report.value;
  report.min_margin = 1.0;
  for (std::size_t yi = 0; yi < report.y_grid.size(); ++yi) {
    for (std::size_t ti = 0; ti < report.t_grid.size(); ++ti) {
      const double t = report.t_grid[ti];
      CompensatedSum acc;
      for (std::size_t pi = 0; pi < law.pairs.size(); ++pi) {
        acc.add(law.pairs[pi].weight * psi_modulus(g_per_y[yi][pi], t));
      }
      const double value = acc.value();
      const double bound = 1.0 - (1.0 - psi_modulus(epsilon, t)) * delta_hat;
      report.value[yi][ti] = value;
      report.margins[yi][ti] = bound - value;
      report.min_margin = std::min(report.min_margin, report.margins[yi][ti]);
    }
  }
  return report;
}

/// Taylor residual of the log-characteristic function against the 5th-order
/// cumulant expansion, per n.
struct CumulantReport {
  std::size_t n = 0;
  std::vector<double> t_grid;
  std::vector<double> residuals;       // |log H_n(t) − Σ_{r=2}^5 (it)^r χ_r/r!|
  std::vector<double> scaled;          // residual · √n
  std::vector<bool> dropped;           // |H_n(t)| < 1e-8: value unusable
  std::vector<std::complex<double>> log_h;  // branch-tracked log H_n(t)
  std::vector<double> chi;             // χ_1..χ_5 used
};

/// Half-width of the admissible t window, √(log n)·(log log(n+1))^{1/4}.
inline double taylor_t_window(std::size_t n) {
  return std::sqrt(std::log(static_cast<double>(n))) *
         std::pow(std::log(std::log(static_cast<double>(n) + 1.0)), 0.25);
}

namespace detail {

/// Branch-tracked complex logarithm along a path of CF evaluations starting
/// from t = 0 where log H = 0. Steps are bisected until the phase moves by
/// less than π/2 between evaluations, so the winding number is unambiguous.
class LogTracker {
 public:
  explicit LogTracker(const MarkovCfContext& ctx) : ctx_(ctx) {}

  /// Continue the log to the target t (monotone walks per sign).
  std::complex<double> continue_to(double t) {
    extend(t);
    return log_h_;
  }

  void reset() {
    t_ = 0.0;
    phase_ = 0.0;
    log_h_ = {0.0, 0.0};
  }

  [[nodiscard]] double modulus_at_current() const { return modulus_; }

 private:
  void extend(double target) {
    int guard = 0;
    while (t_ != target) {
      if (++guard > 4096) {
        throw std::domain_error("log tracking: too many bisection steps");
      }
      double step_to = target;
      std::complex<double> h = ctx_.cf(step_to).value;
      double raw = std::arg(h);
      // Unwind relative to the current phase, then halve the step while the
      // move exceeds pi/2.
      double unwound = unwind(raw);
      while (std::fabs(unwound - phase_) > 1.5707963267948966 &&
             std::fabs(step_to - t_) > 1e-12) {
        step_to = 0.5 * (t_ + step_to);
        h = ctx_.cf(step_to).value;
        raw = std::arg(h);
        unwound = unwind(raw);
      }
      modulus_ = std::abs(h);
      phase_ = unwound;
      t_ = step_to;
      log_h_ = {std::log(std::max(modulus_, 1e-300)), phase_};
    }
  }

  [[nodiscard]] double unwind(double raw) const {
    const double two_pi = 6.2831853071795864769;
    return raw + two_pi * std::round((phase_ - raw) / two_pi);
  }

  const MarkovCfContext& ctx_;
  double t_ = 0.0;
  double phase_ = 0.0;
  double modulus_ = 1.0;
  std::complex<double> log_h_{0.0, 0.0};
};

}  // namespace detail

inline std::vector<CumulantReport> taylor_residual(const FiniteMarkov& chain, double y,
                                                   const std::vector<std::size_t>& n_grid,
                                                   const std::vector<double>& t_grid) {
  if (n_grid.empty() || t_grid.empty()) {
    throw std::domain_error("taylor_residual: empty grid");
  }
  for (std::size_t n : n_grid) {
    if (n < 2) throw std::domain_error("taylor_residual: n must be >= 2");
    const double window = taylor_t_window(n);
    for (double t : t_grid) {
      if (std::fabs(t) > window + 1e-12) {
        throw std::domain_error("taylor_residual: t grid exceeds the admissible window |t| <= " +
                                std::to_string(window) + " at n = " + std::to_string(n));
      }
    }
  }

  std::vector<double> ts(t_grid);
  std::sort(ts.begin(), ts.end());

  std::vector<CumulantReport> reports;
  reports.reserve(n_grid.size());
  for (std::size_t n : n_grid) {
    const MarkovCfContext ctx(chain, y, n);
    CumulantReport rep;
    rep.n = n;
    rep.t_grid = ts;
    rep.chi = ctx.cumulants(5);
    rep.residuals.assign(ts.size(), 0.0);
    rep.scaled.assign(ts.size(), 0.0);
    rep.dropped.assign(ts.size(), false);
    rep.log_h.assign(ts.size(), {0.0, 0.0});

    const auto eval_side = [&](bool positive) {
      detail::LogTracker tracker(ctx);
      // Walk outward from 0 in the given direction.
      std::vector<std::size_t> order;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        if ((positive && ts[i] >= 0.0) || (!positive && ts[i] < 0.0)) order.push_back(i);
      }
      if (positive) {
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ts[a] < ts[b]; });
      } else {
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ts[a] > ts[b]; });
      }
      for (std::size_t idx : order) {
        const double t = ts[idx];
        const std::complex<double> logh = tracker.continue_to(t);
        rep.log_h[idx] = logh;
        if (tracker.modulus_at_current() < 1e-8) {
          rep.dropped[idx] = true;
          continue;
        }
        // Σ_{r=2}^5 (it)^r χ_r / r!
        std::complex<double> taylor{0.0, 0.0};
        std::complex<double> it_pow{1.0, 0.0};
        const std::complex<double> it{0.0, t};
        double fact = 1.0;
        for (int r = 1; r <= 5; ++r) {
          it_pow *= it;
          fact *= r;
          if (r >= 2) taylor += it_pow / fact * rep.chi[r - 1];
        }
        rep.residuals[idx] = std::abs(logh - taylor);
        rep.scaled[idx] = rep.residuals[idx] * std::sqrt(static_cast<double>(n));
      }
    };
    eval_side(true);
    eval_side(false);
    reports.push_back(std::move(rep));
  }
  return reports;
}

/// Descriptive report of |H_n(t)| against the Gaussian envelope exp(−t²/2).
/// Asserted facts are only |H_n(0)| = 1, |H_n| ≤ 1 and conjugate symmetry;
/// the envelope ratio is reported, not asserted.
struct CfEnvelopeReport {
  std::size_t n = 0;
  std::vector<double> t_grid;
  std::vector<double> modulus;
  std::vector<double> gauss_ratio;  // |H_n(t)| / exp(−t²/2)
};

inline CfEnvelopeReport cf_envelope(const FiniteMarkov& chain, double y, std::size_t n,
                                    std::vector<double> t_grid) {
  if (t_grid.empty()) throw std::domain_error("cf_envelope: empty t grid");
  const MarkovCfContext ctx(chain, y, n);
  CfEnvelopeReport rep;
  rep.n = n;
  rep.t_grid = std::move(t_grid);
  rep.modulus.reserve(rep.t_grid.size());
  rep.gauss_ratio.reserve(rep.t_grid.size());
  for (double t : rep.t_grid) {
    const double m = std::abs(ctx.cf(t).value);
    rep.modulus.push_back(m);
    rep.gauss_ratio.push_back(m / std::exp(-0.5 * t * t));
  }
  return rep;
}

}  // namespace qrate
