#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qrate/bivariate_normal.hpp"
#include "qrate/oracles.hpp"
#include "qrate/process.hpp"

namespace qrate {

/// Analytic truth bundled with a model: quantile, density, long-run variance
/// of the indicator process, the CLT variance τ²∞ = σ²∞/f², and mixing bounds.
/// density_at_xi and tau2_inf are absent for discrete marginals (c1 fails).
struct ModelFacts {
  double xi_p = 0.0;
  std::optional<double> density_at_xi;
  double sigma2_inf = 0.0;
  std::optional<double> tau2_inf;
  std::function<double(std::uint64_t)> alpha_bound;
  double beta_bound = 0.0;  // X† = X for every model here
  bool density_holds = false;
  std::string density_note;
  bool nondegeneracy_holds = false;
  std::string nondegeneracy_note;
};

namespace detail {

/// Indicator-process lag covariance of a Gaussian-copula pair at latent
/// correlation r: Cov(I(X_0 ≤ ξ_p), I(X_k ≤ ξ_p)) = Φ2(z_p, z_p; r) − p².
inline double copula_indicator_cov(double zp, double p, double r) {
  if (r == 0.0) return 0.0;
  return bivariate_normal_cdf(zp, zp, r) - p * p;
}

/// σ²∞ for the m-dependent Gaussian MA copula model: finite sum over lags.
inline double ma_indicator_lrv(const GaussianMaModel& ma, double p) {
  const double zp = std_normal_quantile(p);
  CompensatedSum acc;
  acc.add(p * (1.0 - p));
  for (std::size_t k = 1; k <= ma.order(); ++k) {
    acc.add(2.0 * copula_indicator_cov(zp, p, ma.latent_autocorr(k)));
  }
  return acc.value();
}

/// σ²∞ for the Doeblin copula chain: geometric series
///   p(1−p) + 2 Σ_{k≥1} ρ^k (Φ2(z_p, z_p; a^k) − p²),
/// truncated when a term falls below 1e-14 in magnitude (cap 1e4 terms).
inline double doeblin_indicator_lrv(const DoeblinCopulaModel& dc, double p) {
  const double zp = std_normal_quantile(p);
  CompensatedSum acc;
  acc.add(p * (1.0 - p));
  double weight = 1.0;
  double corr = 1.0;
  for (std::size_t k = 1; k <= 10000; ++k) {
    weight *= dc.retain;
    corr *= dc.latent_corr;
    if (weight == 0.0) break;
    const double term = 2.0 * weight * copula_indicator_cov(zp, p, corr);
    acc.add(term);
    if (std::fabs(term) < 1e-14) break;
  }
  return acc.value();
}

inline double markov_indicator_lrv(const FiniteMarkov& chain, const std::vector<double>& nu,
                                   double y) {
  const std::size_t s = chain.n_states();
  std::vector<double> ind(s);
  for (std::size_t i = 0; i < s; ++i) ind[i] = chain.values[i] <= y ? 1.0 : 0.0;
  const double fy = markov_marginal_cdf(chain, nu, y);

  CompensatedSum acc;
  acc.add(fy * (1.0 - fy));
  // iterate rows of P^k applied to the indicator column
  std::vector<double> col(ind);
  for (std::size_t k = 1; k <= 10000; ++k) {
    std::vector<double> next(s, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
      CompensatedSum row;
      for (std::size_t j = 0; j < s; ++j) row.add(chain.transition[i][j] * col[j]);
      next[i] = row.value();
    }
    col.swap(next);
    CompensatedSum cov;
    for (std::size_t i = 0; i < s; ++i) cov.add(nu[i] * ind[i] * col[i]);
    const double gamma_k = cov.value() - fy * fy;
    acc.add(2.0 * gamma_k);
    if (std::fabs(gamma_k) < 1e-14) break;
  }
  return acc.value();
}

}  // namespace detail

inline ModelFacts model_facts(const ProcessModel& model, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("model_facts: p must lie in (0,1)");
  ModelFacts facts;

  if (const auto* iid = std::get_if<IidModel>(&model)) {
    facts.xi_p = iid->marginal.quantile(p);
    const double f = iid->marginal.pdf(facts.xi_p);
    facts.sigma2_inf = p * (1.0 - p);
    facts.alpha_bound = [](std::uint64_t) { return 0.0; };
    if (f > 0.0) {
      facts.density_at_xi = f;
      facts.tau2_inf = facts.sigma2_inf / (f * f);
      facts.density_holds = true;
      facts.density_note = "closed-form marginal density, positive at the quantile";
    } else {
      facts.density_note = "marginal density vanishes at the quantile";
    }
    facts.nondegeneracy_holds = true;
    facts.nondegeneracy_note = "independent coordinates: G0 = p constant, P(G0=1) = 0";
    return facts;
  }

  if (const auto* ma = std::get_if<GaussianMaModel>(&model)) {
    facts.xi_p = ma->marginal.quantile(p);
    const double f = ma->marginal.pdf(facts.xi_p);
    const std::size_t m = ma->order();
    facts.sigma2_inf = detail::ma_indicator_lrv(*ma, p);
    facts.alpha_bound = [m](std::uint64_t n) { return n > m ? 0.0 : 0.25; };
    if (f > 0.0) {
      facts.density_at_xi = f;
      facts.tau2_inf = facts.sigma2_inf / (f * f);
      facts.density_holds = true;
      facts.density_note = "quantile-transform marginal, closed-form density";
    } else {
      facts.density_note = "marginal density vanishes at the quantile";
    }
    facts.nondegeneracy_holds = true;
    facts.nondegeneracy_note =
        "latent conditional law is a nondegenerate normal, so G0 lies in (0,1) a.s.";
    return facts;
  }

  if (const auto* dc = std::get_if<DoeblinCopulaModel>(&model)) {
    facts.xi_p = dc->marginal.quantile(p);
    const double f = dc->marginal.pdf(facts.xi_p);
    const double rho = dc->retain;
    facts.sigma2_inf = detail::doeblin_indicator_lrv(*dc, p);
    facts.alpha_bound = [rho](std::uint64_t n) {
      return std::min(0.25, std::pow(rho, static_cast<double>(n)));
    };
    if (f > 0.0) {
      facts.density_at_xi = f;
      facts.tau2_inf = facts.sigma2_inf / (f * f);
      facts.density_holds = true;
      facts.density_note = "stationary marginal preserved exactly by the copula step";
    } else {
      facts.density_note = "marginal density vanishes at the quantile";
    }
    facts.nondegeneracy_holds = true;
    facts.nondegeneracy_note = "regeneration forces G0 into [(1-rho)p, 1-(1-rho)(1-p)], so P(G0=1) = 0";
    return facts;
  }

  const auto& chain = std::get<FiniteMarkov>(model);
  const std::vector<double> nu = chain.stationary();
  facts.xi_p = markov_marginal_quantile(chain, nu, p);
  facts.sigma2_inf = detail::markov_indicator_lrv(chain, nu, facts.xi_p);
  const double delta = dobrushin_coefficient(chain.transition);
  facts.alpha_bound = [delta](std::uint64_t n) {
    return std::min(0.25, std::pow(delta, static_cast<double>(n)));
  };
  facts.density_holds = false;
  facts.density_note = "discrete marginal: no density at the quantile";
  const DegeneracyReport c5 = degeneracy_probability(chain, facts.xi_p);
  facts.nondegeneracy_holds = c5.g < p;
  facts.nondegeneracy_note = "exact enumeration: P(G0=1) = " + std::to_string(c5.g);
  return facts;
}

}  // namespace qrate
