#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qrate/marginal.hpp"
#include "qrate/markov.hpp"
#include "qrate/rng.hpp"

namespace qrate {

/// Independent draws from a marginal law.
struct IidModel {
  MarginalLaw marginal;
};

/// Gaussian MA(m) latent series pushed through the marginal quantile
/// transform. Coefficients are normalized to Σθ² = 1 on construction so the
/// latent marginal is exactly standard normal; the emitted series is
/// m-dependent with m = theta.size() - 1.
struct GaussianMaModel {
  std::vector<double> theta;
  MarginalLaw marginal;

  GaussianMaModel(std::vector<double> coeffs, MarginalLaw law)
      : theta(std::move(coeffs)), marginal(law) {
    if (theta.empty()) throw std::domain_error("GaussianMaModel: theta must be non-empty");
    double ss = 0.0;
    for (double t : theta) {
      if (!std::isfinite(t)) throw std::domain_error("GaussianMaModel: non-finite coefficient");
      ss += t * t;
    }
    if (!(ss > 0.0)) throw std::domain_error("GaussianMaModel: theta must not be all zero");
    const double norm = std::sqrt(ss);
    for (double& t : theta) t /= norm;
  }

  [[nodiscard]] std::size_t order() const { return theta.size() - 1; }

  /// Latent autocorrelation at lag k (zero beyond the order).
  [[nodiscard]] double latent_autocorr(std::size_t k) const {
    if (k > order()) return 0.0;
    double r = 0.0;
    for (std::size_t j = 0; j + k < theta.size(); ++j) r += theta[j] * theta[j + k];
    return r;
  }
};

/// Doeblin-regenerating Gaussian-copula chain: with probability 1−retain a
/// step draws a fresh latent normal (regeneration), otherwise it takes an
/// AR step with coefficient latent_corr. The stationary marginal equals the
/// supplied law exactly, and the Dobrushin coefficient is at most retain.
struct DoeblinCopulaModel {
  MarginalLaw marginal;
  double retain;
  double latent_corr;

  DoeblinCopulaModel(MarginalLaw law, double retain_prob, double corr)
      : marginal(law), retain(retain_prob), latent_corr(corr) {
    if (!(retain >= 0.0 && retain < 1.0)) {
      throw std::domain_error("DoeblinCopulaModel: retain must lie in [0,1)");
    }
    if (!(latent_corr > -1.0 && latent_corr < 1.0)) {
      throw std::domain_error("DoeblinCopulaModel: latent_corr must lie in (-1,1)");
    }
  }
};

using ProcessModel = std::variant<IidModel, GaussianMaModel, DoeblinCopulaModel, FiniteMarkov>;

/// Stationary sample with generation metadata; regeneration with the same
/// (model, n, seed) is bit-identical.
struct TimeSeries {
  std::vector<double> values;
  std::string model_id;
  std::uint64_t seed = 0;
};

inline std::string model_id(const ProcessModel& model) {
  std::ostringstream out;
  if (const auto* iid = std::get_if<IidModel>(&model)) {
    out << "iid(" << iid->marginal.name() << ")";
  } else if (const auto* ma = std::get_if<GaussianMaModel>(&model)) {
    out << "gaussian_ma(theta=[";
    for (std::size_t i = 0; i < ma->theta.size(); ++i) out << (i ? "," : "") << ma->theta[i];
    out << "]," << ma->marginal.name() << ")";
  } else if (const auto* dc = std::get_if<DoeblinCopulaModel>(&model)) {
    out << "doeblin_copula(retain=" << dc->retain << ",latent_corr=" << dc->latent_corr << ","
        << dc->marginal.name() << ")";
  } else if (const auto* mk = std::get_if<FiniteMarkov>(&model)) {
    out << "finite_markov(S=" << mk->n_states() << ")";
  }
  return out.str();
}

namespace detail {

inline std::size_t sample_index(const std::vector<double>& weights, double u) {
  double c = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    c += weights[i];
    if (u <= c) return i;
  }
  return weights.size() - 1;
}

}  // namespace detail

inline TimeSeries simulate(const ProcessModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::domain_error("simulate: n must be >= 1");
  TimeSeries out;
  out.model_id = model_id(model);
  out.seed = seed;
  out.values.resize(n);
  CounterRng rng = CounterRng::stream(seed);

  if (const auto* iid = std::get_if<IidModel>(&model)) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] = iid->marginal.quantile(rng.next_uniform());
  } else if (const auto* ma = std::get_if<GaussianMaModel>(&model)) {
    const std::size_t m = ma->order();
    std::vector<double> z(n + m);
    for (double& v : z) v = rng.next_normal();
    for (std::size_t t = 0; t < n; ++t) {
      double y = 0.0;
      for (std::size_t j = 0; j <= m; ++j) y += ma->theta[j] * z[m + t - j];
      out.values[t] = ma->marginal.from_latent_normal(y);
    }
  } else if (const auto* dc = std::get_if<DoeblinCopulaModel>(&model)) {
    const double ar = dc->latent_corr;
    const double innov = std::sqrt(1.0 - ar * ar);
    double w = rng.next_normal();  // stationary latent start
    out.values[0] = dc->marginal.from_latent_normal(w);
    for (std::size_t t = 1; t < n; ++t) {
      const double u = rng.next_uniform();
      const double z = rng.next_normal();
      w = (u < 1.0 - dc->retain) ? z : ar * w + innov * z;
      out.values[t] = dc->marginal.from_latent_normal(w);
    }
  } else if (const auto* mk = std::get_if<FiniteMarkov>(&model)) {
    const std::vector<double> nu = mk->stationary();
    std::size_t state = detail::sample_index(nu, rng.next_uniform());
    out.values[0] = mk->values[state];
    for (std::size_t t = 1; t < n; ++t) {
      state = detail::sample_index(mk->transition[state], rng.next_uniform());
      out.values[t] = mk->values[state];
    }
  }
  return out;
}

}  // namespace qrate
