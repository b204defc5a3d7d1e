#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "qrate/distance.hpp"
#include "qrate/errors.hpp"
#include "qrate/estimators.hpp"
#include "qrate/model_facts.hpp"
#include "qrate/oracles.hpp"
#include "qrate/process.hpp"
#include "qrate/spectral.hpp"

namespace qrate {
namespace detail {

/// Deterministic parallel map: static chunking by index, results land in
/// caller-owned slots, so the reduction order never depends on thread count.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t chunk = (count + static_cast<std::size_t>(workers) - 1) /
                            static_cast<std::size_t>(workers);
  for (int w = 0; w < workers; ++w) {
    const std::size_t lo = static_cast<std::size_t>(w) * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi]() {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

enum class RateMode { exact_iid, exact_markov, monte_carlo };

inline std::string rate_mode_label(RateMode mode) {
  switch (mode) {
    case RateMode::exact_iid:
      return "exact-iid";
    case RateMode::exact_markov:
      return "exact-markov";
    case RateMode::monte_carlo:
      return "mc";
  }
  return "";
}

inline RateMode parse_rate_mode(const std::string& label) {
  if (label == "exact-iid") return RateMode::exact_iid;
  if (label == "exact-markov") return RateMode::exact_markov;
  if (label == "mc") return RateMode::monte_carlo;
  throw config_error("unknown rate mode \"" + label + "\"");
}

/// Evaluation grid policy for the normalized statistic: x spans
/// ±range_multiplier·τ with the given point count. The tail omitted beyond
/// the default eight-τ window contributes less than Φ(−8) ≈ 6e-16.
struct XGridPolicy {
  double range_multiplier = 8.0;
  std::size_t points = 2001;
};

struct RateExperimentConfig {
  ProcessModel model;
  double p = 0.5;
  RateMode mode = RateMode::exact_iid;
  std::vector<std::size_t> n_grid;
  std::size_t replicates = 1000;
  XGridPolicy x_grid;
  std::uint64_t master_seed = 0;
  int threads = 1;
  std::size_t memory_cap_bytes = kDefaultDpMemoryCap;

  void validate() const {
    if (!(p > 0.0 && p < 1.0)) throw config_error("rate config: p must lie in (0,1)");
    if (n_grid.size() < 2) throw config_error("rate config: n_grid needs at least 2 entries");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 2) throw config_error("rate config: n must be >= 2");
      if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
        throw config_error("rate config: n_grid must be strictly increasing");
      }
    }
    if (mode == RateMode::monte_carlo && replicates < 100) {
      throw config_error("rate config: Monte Carlo mode needs replicates >= 100");
    }
    if (x_grid.points < 2 || !(x_grid.range_multiplier > 0.0)) {
      throw config_error("rate config: invalid x grid policy");
    }
    if (threads < 1) throw config_error("rate config: threads must be >= 1");
  }
};

struct RatePoint {
  std::size_t n = 0;
  double delta = 0.0;
  double sqrt_n_delta = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

struct RateReport {
  std::string mode;
  double p = 0.5;
  std::uint64_t seed = 0;
  std::vector<RatePoint> points;
  SlopeFit fit;
  double mc_noise_floor = 0.0;  // ≈ 1/√R, Monte Carlo mode only
};

/// Ordinary least squares of log Δ on log n.
inline SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  const std::size_t m = points.size();
  if (m < 2) throw std::domain_error("fit_loglog_slope: need at least 2 points");
  std::vector<double> xs(m), ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(points[i].second > 0.0)) {
      throw std::domain_error("fit_loglog_slope: all deltas must be > 0");
    }
    xs[i] = std::log(points[i].first);
    ys[i] = std::log(points[i].second);
  }
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= static_cast<double>(m);
  ybar /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  if (m > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = ys[i] - fit.intercept - fit.slope * xs[i];
      rss += r * r;
    }
    fit.stderr_slope = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  }
  return fit;
}

namespace detail {

inline SlopeFit fit_points(const std::vector<RatePoint>& pts) {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(pts.size());
  for (const auto& pt : pts) pairs.emplace_back(static_cast<double>(pt.n), pt.delta);
  return fit_loglog_slope(pairs);
}

}  // namespace detail

/// Exact Berry–Esseen distance for an i.i.d. model via the quantile/EDF
/// duality and binomial tails: no simulation noise at all.
inline RateReport run_rate_exact_iid(const RateExperimentConfig& config) {
  config.validate();
  const auto* iid = std::get_if<IidModel>(&config.model);
  if (iid == nullptr) throw config_error("exact-iid mode requires an iid model");
  const ModelFacts facts = model_facts(config.model, config.p);
  if (!facts.density_holds || !facts.tau2_inf) {
    throw std::domain_error("exact-iid rate: tau_inf undefined (no positive density at the quantile)");
  }
  const double tau = std::sqrt(*facts.tau2_inf);

  std::vector<double> xs(config.x_grid.points);
  const double range = config.x_grid.range_multiplier * tau;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = -range + 2.0 * range * static_cast<double>(i) /
                         static_cast<double>(xs.size() - 1);
  }

  RateReport report;
  report.mode = rate_mode_label(RateMode::exact_iid);
  report.p = config.p;
  report.seed = config.master_seed;
  report.points.resize(config.n_grid.size());

  detail::parallel_for(config.n_grid.size(), config.threads, [&](std::size_t gi) {
    const std::size_t n = config.n_grid[gi];
    const double root_n = std::sqrt(static_cast<double>(n));
    double delta = 0.0;
    for (double x : xs) {
      const double fy = std::clamp(iid->marginal.cdf(facts.xi_p + x / root_n), 0.0, 1.0);
      const double exact = iid_quantile_cdf(n, config.p, fy);
      delta = std::max(delta, std::fabs(exact - std_normal_cdf(x / tau)));
    }
    report.points[gi] = {n, delta, root_n * delta};
  });
  report.fit = detail::fit_points(report.points);
  return report;
}

/// Midpoint of the state-value gap at the stationary p-quantile; the fixed y
/// used by the exact Markov rate experiment.
inline double markov_gap_midpoint(const FiniteMarkov& chain, double p) {
  if (chain.n_states() < 2) {
    throw std::domain_error("exact-markov rate: need at least 2 states");
  }
  const std::vector<double> nu = chain.stationary();
  const double xi = markov_marginal_quantile(chain, nu, p);
  for (std::size_t s = 0; s + 1 < chain.n_states(); ++s) {
    if (chain.values[s] == xi) return 0.5 * (chain.values[s] + chain.values[s + 1]);
  }
  const std::size_t last = chain.n_states() - 1;
  return 0.5 * (chain.values[last - 1] + chain.values[last]);
}

/// Exact lattice Kolmogorov distance of the standardized indicator count at
/// the fixed y, per n, via the count DP.
inline RateReport run_rate_exact_markov(const RateExperimentConfig& config) {
  config.validate();
  const auto* chain = std::get_if<FiniteMarkov>(&config.model);
  if (chain == nullptr) throw config_error("exact-markov mode requires a finite_markov model");
  if (!(dobrushin_coefficient(chain->transition) < 1.0)) {
    throw std::domain_error("exact-markov rate: Dobrushin coefficient must be < 1");
  }
  const double y = markov_gap_midpoint(*chain, config.p);
  const std::vector<double> nu = chain->stationary();
  const double fy = markov_marginal_cdf(*chain, nu, y);

  RateReport report;
  report.mode = rate_mode_label(RateMode::exact_markov);
  report.p = config.p;
  report.seed = config.master_seed;
  report.points.resize(config.n_grid.size());

  detail::parallel_for(config.n_grid.size(), config.threads, [&](std::size_t gi) {
    const std::size_t n = config.n_grid[gi];
    const CountDistribution counts =
        markov_count_distribution(*chain, y, n, config.memory_cap_bytes);
    const double mu = static_cast<double>(n) * fy;
    const double sigma = std::sqrt(counts.variance());
    const double delta = lattice_kolmogorov_distance(counts, mu, sigma);
    report.points[gi] = {n, delta, std::sqrt(static_cast<double>(n)) * delta};
  });
  report.fit = detail::fit_points(report.points);
  return report;
}

/// Exact Kolmogorov distance between the empirical law of R sorted draws and
/// the standard normal.
inline double ks_empirical_vs_normal(std::vector<double> draws) {
  std::sort(draws.begin(), draws.end());
  const double r = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = std_normal_cdf(draws[i]);
    d = std::max(d, std::fabs((static_cast<double>(i) + 1.0) / r - f));
    d = std::max(d, std::fabs(static_cast<double>(i) / r - f));
  }
  return d;
}

/// Monte Carlo estimate of the Berry–Esseen distance: replicate i of size n
/// uses stream (master_seed, n, i); the empirical law of the normalized
/// statistic is compared to Φ by exact KS.
inline RateReport run_rate_monte_carlo(const RateExperimentConfig& config) {
  config.validate();
  const ModelFacts facts = model_facts(config.model, config.p);
  if (!facts.density_holds || !facts.tau2_inf) {
    throw std::domain_error("mc rate: model facts lack tau_inf (no positive density at the quantile)");
  }

  RateReport report;
  report.mode = rate_mode_label(RateMode::monte_carlo);
  report.p = config.p;
  report.seed = config.master_seed;
  report.mc_noise_floor = 1.0 / std::sqrt(static_cast<double>(config.replicates));
  report.points.resize(config.n_grid.size());

  for (std::size_t gi = 0; gi < config.n_grid.size(); ++gi) {
    const std::size_t n = config.n_grid[gi];
    std::vector<double> stats(config.replicates);
    detail::parallel_for(config.replicates, config.threads, [&](std::size_t i) {
      const std::uint64_t seed = derive_seed(config.master_seed, n, i);
      const TimeSeries ts = simulate(config.model, n, seed);
      stats[i] = normalized_statistic(ts, facts, config.p);
    });
    const double delta = ks_empirical_vs_normal(std::move(stats));
    report.points[gi] = {n, delta, std::sqrt(static_cast<double>(n)) * delta};
  }
  report.fit = detail::fit_points(report.points);
  return report;
}

inline RateReport run_rate(const RateExperimentConfig& config) {
  switch (config.mode) {
    case RateMode::exact_iid:
      return run_rate_exact_iid(config);
    case RateMode::exact_markov:
      return run_rate_exact_markov(config);
    case RateMode::monte_carlo:
      return run_rate_monte_carlo(config);
  }
  throw config_error("rate: unknown mode");
}

struct CoverageConfig {
  ProcessModel model;
  double p = 0.5;
  double level = 0.95;
  std::size_t n = 1000;
  std::size_t replicates = 1000;
  std::uint64_t master_seed = 0;
  int threads = 1;

  void validate() const {
    if (!(p > 0.0 && p < 1.0) || !(level > 0.0 && level < 1.0)) {
      throw config_error("coverage config: p and level must lie in (0,1)");
    }
    if (n < 16) throw config_error("coverage config: n must be >= 16");
    if (replicates < 1) throw config_error("coverage config: replicates must be >= 1");
    if (threads < 1) throw config_error("coverage config: threads must be >= 1");
  }
};

struct CoverageReport {
  double level = 0.0;
  std::size_t n = 0;
  std::size_t replicates = 0;
  double coverage = 0.0;
  double width_mean = 0.0;
  double width_median = 0.0;
  double binomial_stderr = 0.0;
  std::size_t plugin_failures = 0;
  std::uint64_t seed = 0;
};

/// Fraction of replicates whose plug-in CI contains the true quantile.
/// Replicates whose plug-in fails count as not covered; the experiment aborts
/// if more than 5% fail.
inline CoverageReport run_coverage(const CoverageConfig& config) {
  config.validate();
  const ModelFacts facts = model_facts(config.model, config.p);

  std::vector<int> covered(config.replicates, 0);
  std::vector<double> widths(config.replicates, -1.0);  // -1 marks a failure
  detail::parallel_for(config.replicates, config.threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(config.master_seed, config.n, i);
    const TimeSeries ts = simulate(config.model, config.n, seed);
    try {
      const QuantileEstimate est = estimate_quantile_ci(ts, config.p, config.level);
      covered[i] = (est.ci_lo <= facts.xi_p && facts.xi_p <= est.ci_hi) ? 1 : 0;
      widths[i] = est.ci_hi - est.ci_lo;
    } catch (const std::domain_error&) {
      widths[i] = -1.0;
    }
  });

  CoverageReport report;
  report.level = config.level;
  report.n = config.n;
  report.replicates = config.replicates;
  report.seed = config.master_seed;

  CompensatedSum width_sum;
  std::vector<double> ok_widths;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < config.replicates; ++i) {
    if (widths[i] < 0.0) {
      ++report.plugin_failures;
      continue;
    }
    hits += static_cast<std::size_t>(covered[i]);
    width_sum.add(widths[i]);
    ok_widths.push_back(widths[i]);
  }
  if (static_cast<double>(report.plugin_failures) >
      0.05 * static_cast<double>(config.replicates)) {
    std::ostringstream msg;
    msg << "coverage: plug-in failure rate " << report.plugin_failures << "/"
        << config.replicates << " exceeds 5%";
    throw std::domain_error(msg.str());
  }
  report.coverage = static_cast<double>(hits) / static_cast<double>(config.replicates);
  if (!ok_widths.empty()) {
    report.width_mean = width_sum.value() / static_cast<double>(ok_widths.size());
    std::sort(ok_widths.begin(), ok_widths.end());
    report.width_median = ok_widths[ok_widths.size() / 2];
  }
  report.binomial_stderr = std::sqrt(report.coverage * (1.0 - report.coverage) /
                                     static_cast<double>(config.replicates));
  return report;
}

/// Per-condition verdicts with provenance; verdicts never throw.
struct ConditionReport {
  struct Item {
    std::string id;
    std::string verdict;  // PASS / FAIL / NA
    std::string detail;
  };
  std::vector<Item> items;
  bool all_pass = true;

  void add(std::string id, bool pass, std::string detail) {
    all_pass = all_pass && pass;
    items.push_back({std::move(id), pass ? "PASS" : "FAIL", std::move(detail)});
  }
  void add_na(std::string id, std::string detail) {
    items.push_back({std::move(id), "NA", std::move(detail)});
  }
};

inline ConditionReport check_conditions(const ProcessModel& model, double p) {
  if (!(p > 0.0 && p < 1.0)) throw config_error("check_conditions: p must lie in (0,1)");
  ConditionReport report;

  // Finite chains are handled without the facts bundle so that degenerate
  // inputs (reducible chains) still produce verdicts instead of exceptions.
  if (const auto* chain = std::get_if<FiniteMarkov>(&model)) {
    report.add("density", false, "discrete marginal: no density at the quantile");
    const double delta = dobrushin_coefficient(chain->transition);
    try {
      const std::vector<double> nu = chain->stationary();
      const double xi = markov_marginal_quantile(*chain, nu, p);
      const double sigma2 = detail::markov_indicator_lrv(*chain, nu, xi);
      report.add("longrun-variance", sigma2 > 0.0, "sigma2_inf = " + std::to_string(sigma2));
      const DegeneracyReport c5 = degeneracy_probability(*chain, xi);
      std::ostringstream c5s;
      c5s << "exact g(xi_p) = " << c5.g << ", margin p - g = " << (p - c5.g);
      report.add("nondegeneracy", c5.g < p, c5s.str());
    } catch (const std::domain_error& e) {
      report.add_na("longrun-variance", e.what());
      report.add_na("nondegeneracy", e.what());
    }
    std::ostringstream c2;
    c2 << "alpha(n) <= min(1/4, " << delta << "^n)";
    report.add("mixing", delta < 1.0, c2.str());
    report.add("markov-approx", true, "first-order Markov: exact");
    report.add("kernel-contraction", delta < 1.0, "Dobrushin coefficient = " + std::to_string(delta));
    report.add("measurability", true, "X_dagger = X by construction: beta(n) = 0");
    return report;
  }

  const ModelFacts facts = model_facts(model, p);
  std::ostringstream c1;
  c1 << facts.density_note;
  if (facts.density_at_xi) c1 << "; f(xi_p) = " << *facts.density_at_xi;
  report.add("density", facts.density_holds, c1.str());
  report.add("longrun-variance", facts.sigma2_inf > 0.0,
             "sigma2_inf = " + std::to_string(facts.sigma2_inf));

  if (std::holds_alternative<IidModel>(model)) {
    report.add("mixing", true, "independent: alpha(n) = 0 for all n >= 1");
    report.add("markov-approx", true, "independent: conditional laws are unconditional");
    report.add("nondegeneracy", facts.nondegeneracy_holds, facts.nondegeneracy_note);
  } else if (const auto* ma = std::get_if<GaussianMaModel>(&model)) {
    report.add("mixing", true,
               "m-dependent with m = " + std::to_string(ma->order()) +
                   ": alpha(n) = 0 beyond m, any polynomial exponent holds");
    report.add("markov-approx", true, "m-dependent: exact beyond lag m");
    const auto spec = spectral_density_positivity_check(
        [&](double lambda) { return ma_spectral_density(ma->theta, lambda); }, 4096);
    std::ostringstream c5;
    c5 << facts.nondegeneracy_note << "; spectral density min " << spec.min_value << " at lambda "
       << spec.argmin_lambda;
    report.add("nondegeneracy", facts.nondegeneracy_holds && spec.pass, c5.str());
    report.add("spectral-positivity", spec.pass,
               "min over " + std::to_string(spec.grid_size) + "-point grid = " +
                   std::to_string(spec.min_value));
  } else if (const auto* dc = std::get_if<DoeblinCopulaModel>(&model)) {
    std::ostringstream c2;
    c2 << "alpha(n) <= min(1/4, " << dc->retain << "^n), geometric";
    report.add("mixing", dc->retain < 1.0, c2.str());
    report.add("markov-approx", true, "first-order Markov: exact");
    report.add("nondegeneracy", facts.nondegeneracy_holds, facts.nondegeneracy_note);
    report.add("kernel-contraction", dc->retain < 1.0,
               "Dobrushin coefficient <= retain = " + std::to_string(dc->retain));
  }

  report.add("measurability", true, "X_dagger = X by construction: beta(n) = 0");
  return report;
}

}  // namespace qrate
