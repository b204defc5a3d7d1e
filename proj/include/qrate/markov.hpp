#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrate/summation.hpp"

namespace qrate {

using StochasticMatrix = std::vector<std::vector<double>>;

inline void validate_stochastic(const StochasticMatrix& P) {
  const std::size_t s = P.size();
  if (s == 0) throw std::domain_error("stochastic matrix: empty");
  for (const auto& row : P) {
    if (row.size() != s) throw std::domain_error("stochastic matrix: must be square");
    CompensatedSum sum;
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::domain_error("stochastic matrix: entries must be finite and >= 0");
      }
      sum.add(v);
    }
    if (std::fabs(sum.value() - 1.0) > 1e-12) {
      throw std::domain_error("stochastic matrix: rows must sum to 1");
    }
  }
}

/// Maximal total-variation distance between transition rows. A value < 1
/// certifies uniform kernel contraction and geometric mixing.
inline double dobrushin_coefficient(const StochasticMatrix& P) {
  validate_stochastic(P);
  const std::size_t s = P.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = i + 1; j < s; ++j) {
      CompensatedSum tv;
      for (std::size_t c = 0; c < s; ++c) tv.add(std::fabs(P[i][c] - P[j][c]));
      worst = std::max(worst, 0.5 * tv.value());
    }
  }
  return std::min(worst, 1.0);
}

namespace detail {

/// Communicating classes of the support graph; used to reject reducible
/// chains with a message that names a closed (absorbing) class.
inline std::vector<std::vector<std::size_t>> communicating_classes(const StochasticMatrix& P) {
  const std::size_t s = P.size();
  std::vector<std::vector<bool>> reach(s, std::vector<bool>(s, false));
  for (std::size_t i = 0; i < s; ++i) {
    reach[i][i] = true;
    for (std::size_t j = 0; j < s; ++j) {
      if (P[i][j] > 0.0) reach[i][j] = true;
    }
  }
  for (std::size_t k = 0; k < s; ++k) {
    for (std::size_t i = 0; i < s; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < s; ++j) {
        if (reach[k][j]) reach[i][j] = true;
      }
    }
  }
  std::vector<bool> assigned(s, false);
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < s; ++i) {
    if (assigned[i]) continue;
    std::vector<std::size_t> cls;
    for (std::size_t j = 0; j < s; ++j) {
      if (reach[i][j] && reach[j][i]) {
        cls.push_back(j);
        assigned[j] = true;
      }
    }
    classes.push_back(std::move(cls));
  }
  return classes;
}

}  // namespace detail

/// Unique stationary distribution of an irreducible chain, by direct linear
/// solve of ν(P − I) = 0 with the normalization Σν = 1 (partial-pivot
/// elimination; S is small). Throws on reducible chains, naming a closed class.
inline std::vector<double> stationary_distribution(const StochasticMatrix& P) {
  validate_stochastic(P);
  const std::size_t s = P.size();

  const auto classes = detail::communicating_classes(P);
  if (classes.size() > 1) {
    // Find a closed class: no mass leaves it.
    for (const auto& cls : classes) {
      bool closed = true;
      for (std::size_t i : cls) {
        for (std::size_t j = 0; j < s && closed; ++j) {
          if (P[i][j] > 0.0 &&
              std::find(cls.begin(), cls.end(), j) == cls.end()) {
            closed = false;
          }
        }
      }
      if (closed) {
        std::string states;
        for (std::size_t i : cls) states += (states.empty() ? "" : ",") + std::to_string(i);
        throw std::domain_error("stationary_distribution: chain is reducible; absorbing class {" +
                                states + "}");
      }
    }
    throw std::domain_error("stationary_distribution: chain is reducible");
  }

  // Rows i < s-1: sum_j nu_j (P[j][i] - delta_ij) = 0; last row: sum nu = 1.
  std::vector<std::vector<double>> a(s, std::vector<double>(s + 1, 0.0));
  for (std::size_t i = 0; i + 1 < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) a[i][j] = P[j][i] - (i == j ? 1.0 : 0.0);
  }
  for (std::size_t j = 0; j < s; ++j) a[s - 1][j] = 1.0;
  a[s - 1][s] = 1.0;

  for (std::size_t col = 0; col < s; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < s; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    if (std::fabs(a[piv][col]) < 1e-14) {
      throw std::domain_error("stationary_distribution: singular system");
    }
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < s; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= s; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  std::vector<double> nu(s);
  for (std::size_t i = 0; i < s; ++i) nu[i] = std::max(0.0, a[i][s] / a[i][i]);

  CompensatedSum total;
  for (double v : nu) total.add(v);
  for (double& v : nu) v /= total.value();
  return nu;
}

/// Finite-state Markov chain emitting values[state], started at stationarity.
struct FiniteMarkov {
  StochasticMatrix transition;
  std::vector<double> values;

  FiniteMarkov(StochasticMatrix P, std::vector<double> vals)
      : transition(std::move(P)), values(std::move(vals)) {
    validate_stochastic(transition);
    if (values.size() != transition.size()) {
      throw std::domain_error("FiniteMarkov: values must match the state count");
    }
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (!(values[i] > values[i - 1])) {
        throw std::domain_error("FiniteMarkov: values must be strictly increasing");
      }
    }
  }

  [[nodiscard]] std::size_t n_states() const { return values.size(); }
  [[nodiscard]] std::vector<double> stationary() const {
    return stationary_distribution(transition);
  }
};

/// Stationary marginal CDF of the emitted values at y.
inline double markov_marginal_cdf(const FiniteMarkov& chain, const std::vector<double>& nu,
                                  double y) {
  CompensatedSum f;
  for (std::size_t s = 0; s < chain.n_states(); ++s) {
    if (chain.values[s] <= y) f.add(nu[s]);
  }
  return std::min(1.0, f.value());
}

/// Stationary marginal p-quantile: the smallest emitted value v with F(v) >= p.
inline double markov_marginal_quantile(const FiniteMarkov& chain, const std::vector<double>& nu,
                                       double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("markov_marginal_quantile: p in (0,1)");
  CompensatedSum f;
  for (std::size_t s = 0; s < chain.n_states(); ++s) {
    f.add(nu[s]);
    if (f.value() >= p - 1e-12) return chain.values[s];
  }
  return chain.values.back();
}

}  // namespace qrate
