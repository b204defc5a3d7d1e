#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qrate/binomial.hpp"
#include "qrate/distance.hpp"
#include "qrate/edf.hpp"
#include "qrate/errors.hpp"
#include "qrate/markov.hpp"
#include "qrate/summation.hpp"

namespace qrate {

/// P(sample p-quantile ≤ y) for an i.i.d. sample with F(y) = Fy. With the
/// inf-definition of the quantile this is exactly P(Bin(n, Fy) ≥ ⌈np⌉).
inline double iid_quantile_cdf(std::size_t n, double p, double Fy) {
  if (n == 0) throw std::domain_error("iid_quantile_cdf: n must be >= 1");
  if (!(Fy >= 0.0 && Fy <= 1.0)) throw std::domain_error("iid_quantile_cdf: Fy must lie in [0,1]");
  const auto k0 = static_cast<std::int64_t>(quantile_order_index(n, p));
  return binomial_upper_tail(static_cast<std::int64_t>(n), Fy, k0);
}

inline constexpr std::size_t kDefaultDpMemoryCap = std::size_t{2} << 30;  // 2 GiB

/// Exact pmf of Σ_{i=1}^n I(X_i ≤ y) for a stationary finite-state chain,
/// by dynamic programming over (count, state). O(n²S²) time, O(nS) space,
/// Kahan-compensated accumulation.
inline CountDistribution markov_count_distribution(const FiniteMarkov& chain, double y,
                                                   std::size_t n,
                                                   std::size_t memory_cap_bytes = kDefaultDpMemoryCap) {
  if (n == 0) throw std::domain_error("markov_count_distribution: n must be >= 1");
  const std::size_t s = chain.n_states();
  const std::size_t cells = (n + 1) * s;
  if (cells * 3 * sizeof(double) > memory_cap_bytes) {
    throw resource_error("markov_count_distribution: DP table exceeds the memory cap");
  }

  const std::vector<double> nu = chain.stationary();
  std::vector<int> ind(s);
  for (std::size_t st = 0; st < s; ++st) ind[st] = chain.values[st] <= y ? 1 : 0;

  // table[k*s + st] = P(count = k after t steps, state = st). Cell sums are
  // Kahan-compensated within each step and the residual folded back at the
  // step boundary, keeping drift over the n² additions near 1 ulp per cell.
  std::vector<double> table(cells, 0.0);
  std::vector<double> next(cells, 0.0), carry(cells, 0.0);
  for (std::size_t st = 0; st < s; ++st) {
    table[static_cast<std::size_t>(ind[st]) * s + st] = nu[st];
  }

  for (std::size_t t = 1; t < n; ++t) {
    const std::size_t active = (t + 2) * s;
    std::fill(next.begin(), next.begin() + active, 0.0);
    std::fill(carry.begin(), carry.begin() + active, 0.0);
    for (std::size_t k = 0; k <= t; ++k) {
      for (std::size_t st = 0; st < s; ++st) {
        const double mass = table[k * s + st];
        if (mass == 0.0) continue;
        const auto& row = chain.transition[st];
        for (std::size_t to = 0; to < s; ++to) {
          if (row[to] == 0.0) continue;
          const std::size_t idx = (k + static_cast<std::size_t>(ind[to])) * s + to;
          const double y = mass * row[to] - carry[idx];
          const double acc = next[idx] + y;
          carry[idx] = (acc - next[idx]) - y;
          next[idx] = acc;
        }
      }
    }
    for (std::size_t idx = 0; idx < active; ++idx) next[idx] -= carry[idx];
    table.swap(next);
  }

  std::vector<double> pmf(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    CompensatedSum row;
    for (std::size_t st = 0; st < s; ++st) row.add(table[k * s + st]);
    pmf[k] = std::max(0.0, row.value());
  }
  return CountDistribution(n, std::move(pmf));
}

struct CfSample {
  double t = 0.0;
  std::complex<double> value{1.0, 0.0};
  std::size_t n = 0;
};

/// Precomputed context for repeated characteristic-function evaluation at a
/// fixed (chain, y, n): stationary law, F(y), and the exact σ_n(y) taken from
/// the count distribution's variance.
class MarkovCfContext {
 public:
  MarkovCfContext(const FiniteMarkov& chain, double y, std::size_t n,
                  std::size_t memory_cap_bytes = kDefaultDpMemoryCap)
      : chain_(chain), n_(n), counts_(markov_count_distribution(chain, y, n, memory_cap_bytes)) {
    nu_ = chain.stationary();
    const std::size_t s = chain.n_states();
    fy_ = markov_marginal_cdf(chain, nu_, y);
    const double var = counts_.variance();
    sigma_n_ = std::sqrt(var / static_cast<double>(n));
    if (!(sigma_n_ > 1e-12)) {
      throw std::domain_error("markov_cf: degenerate sigma_n at this y");
    }
    weights_.resize(s);
    for (std::size_t st = 0; st < s; ++st) {
      const double i = chain.values[st] <= y ? 1.0 : 0.0;
      weights_[st] = (i - fy_) / sigma_n_;
    }
  }

  /// H_n(t) = E exp(itS_n) with S_n = n^{-1/2} Σ (I(X_i ≤ y) − F(y))/σ_n(y),
  /// as a product of diagonal phase factors and transition steps.
  [[nodiscard]] CfSample cf(double t) const {
    const std::size_t s = chain_.n_states();
    const double root_n = std::sqrt(static_cast<double>(n_));
    std::vector<std::complex<double>> phase(s), v(s);
    for (std::size_t st = 0; st < s; ++st) {
      phase[st] = std::polar(1.0, t * weights_[st] / root_n);
      v[st] = nu_[st] * phase[st];
    }
    std::vector<std::complex<double>> w(s);
    for (std::size_t step = 1; step < n_; ++step) {
      for (std::size_t to = 0; to < s; ++to) w[to] = {0.0, 0.0};
      for (std::size_t from = 0; from < s; ++from) {
        const auto& row = chain_.transition[from];
        for (std::size_t to = 0; to < s; ++to) {
          if (row[to] != 0.0) w[to] += v[from] * row[to];
        }
      }
      for (std::size_t to = 0; to < s; ++to) v[to] = w[to] * phase[to];
    }
    std::complex<double> h{0.0, 0.0};
    for (std::size_t st = 0; st < s; ++st) h += v[st];
    return CfSample{t, h, n_};
  }

  /// Cumulants χ_1..χ_max of S_n from exact standardized moments of the count
  /// distribution (raw moments -> cumulants by the standard recursion).
  /// χ_2 = 1 by the standardization.
  [[nodiscard]] std::vector<double> cumulants(int max_order) const {
    if (max_order < 2 || max_order > 5) {
      throw std::domain_error("markov_cumulants: max_order must lie in [2,5]");
    }
    const double center = static_cast<double>(n_) * fy_;
    const double scale = std::sqrt(static_cast<double>(n_)) * sigma_n_;
    std::vector<double> m(max_order + 1, 0.0);  // raw moments of S_n, m[r]
    for (int r = 1; r <= max_order; ++r) m[r] = counts_.standardized_moment(center, scale, r);
    std::vector<double> chi(max_order + 1, 0.0);
    for (int r = 1; r <= max_order; ++r) {
      double acc = m[r];
      // chi_r = m_r - sum_{j=1}^{r-1} C(r-1, j-1) chi_j m_{r-j}
      double c = 1.0;
      for (int j = 1; j < r; ++j) {
        acc -= c * chi[j] * m[r - j];
        c = c * static_cast<double>(r - 1 - (j - 1)) / static_cast<double>(j);
      }
      chi[r] = acc;
    }
    return {chi.begin() + 1, chi.end()};
  }

  [[nodiscard]] double sigma_n() const { return sigma_n_; }
  [[nodiscard]] double fy() const { return fy_; }
  [[nodiscard]] const CountDistribution& counts() const { return counts_; }

 private:
  FiniteMarkov chain_;
  std::size_t n_;
  CountDistribution counts_;
  std::vector<double> nu_;
  std::vector<double> weights_;
  double fy_ = 0.0;
  double sigma_n_ = 0.0;
};

inline CfSample markov_cf(const FiniteMarkov& chain, double y, std::size_t n, double t) {
  return MarkovCfContext(chain, y, n).cf(t);
}

/// χ_1..χ_max of the standardized indicator sum. χ_2 = 1 ± 1e-10 always.
inline std::vector<double> markov_cumulants(const FiniteMarkov& chain, double y, std::size_t n,
                                            int max_order) {
  return MarkovCfContext(chain, y, n).cumulants(max_order);
}

/// The conditional law of the middle coordinate of a stationary chain given
/// its two neighbors: g0(a,b,c) = P_ab·P_bc/(P²)_ac on pairs with positive
/// two-step probability; pair weights are ν_a (P²)_ac.
struct ConditionalLaw {
  struct Pair {
    std::size_t a = 0;
    std::size_t c = 0;
    double weight = 0.0;
    std::vector<double> pmf;
  };
  std::vector<Pair> pairs;
  std::vector<double> stationary;
  std::vector<double> values;

  /// Conditional mass that the middle value is ≤ y, for one pair.
  [[nodiscard]] static double mass_at_most(const Pair& pair, const std::vector<double>& values,
                                           double y) {
    double g = 0.0;
    for (std::size_t b = 0; b < pair.pmf.size(); ++b) {
      if (values[b] <= y) g += pair.pmf[b];
    }
    return g;
  }

  /// True when the pair forces the middle value into {v ≤ y}: every state in
  /// the conditional support emits a value ≤ y. Exact (support-based).
  [[nodiscard]] static bool forces_at_most(const Pair& pair, const std::vector<double>& values,
                                           double y) {
    for (std::size_t b = 0; b < pair.pmf.size(); ++b) {
      if (pair.pmf[b] > 0.0 && values[b] > y) return false;
    }
    return true;
  }
};

inline ConditionalLaw conditional_law(const FiniteMarkov& chain) {
  const std::size_t s = chain.n_states();
  ConditionalLaw law;
  law.stationary = chain.stationary();
  law.values = chain.values;
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t c = 0; c < s; ++c) {
      double p2 = 0.0;
      std::vector<double> pmf(s, 0.0);
      for (std::size_t b = 0; b < s; ++b) {
        pmf[b] = chain.transition[a][b] * chain.transition[b][c];
        p2 += pmf[b];
      }
      if (p2 <= 0.0) continue;
      for (double& v : pmf) v /= p2;
      law.pairs.push_back({a, c, law.stationary[a] * p2, std::move(pmf)});
    }
  }
  return law;
}

/// Exact evaluation of the conditional-degeneracy probability
/// g(xi) = P(G_0(xi) = 1) together with E G_0(xi), F(xi) and the margin
/// F(xi) − g(xi). At xi = ξ_p (continuous case F(ξ_p) = p) the margin is the
/// quantity p − g(ξ_p).
struct DegeneracyReport {
  double g = 0.0;
  double e_g0 = 0.0;
  double f_xi = 0.0;
  double margin = 0.0;
};

inline DegeneracyReport degeneracy_probability(const FiniteMarkov& chain, double xi) {
  const ConditionalLaw law = conditional_law(chain);
  DegeneracyReport report;
  CompensatedSum g, eg;
  for (const auto& pair : law.pairs) {
    if (ConditionalLaw::forces_at_most(pair, law.values, xi)) g.add(pair.weight);
    eg.add(pair.weight * ConditionalLaw::mass_at_most(pair, law.values, xi));
  }
  report.g = std::min(1.0, g.value());
  report.e_g0 = std::min(1.0, eg.value());
  report.f_xi = markov_marginal_cdf(chain, law.stationary, xi);
  report.margin = report.f_xi - report.g;
  return report;
}

/// E|E{exp(itI(X_1 ≤ y)) | C}| evaluated exactly over neighbor pairs.
inline double conditional_cf_modulus(const FiniteMarkov& chain, double y, double t) {
  const ConditionalLaw law = conditional_law(chain);
  CompensatedSum acc;
  for (const auto& pair : law.pairs) {
    const double g = ConditionalLaw::mass_at_most(pair, law.values, y);
    acc.add(pair.weight * std::abs(g * std::polar(1.0, t) + (1.0 - g)));
  }
  return acc.value();
}

}  // namespace qrate
