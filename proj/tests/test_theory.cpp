#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "qrate/theory.hpp"
#include "support/enumeration.hpp"

using namespace qrate;

namespace {

const FiniteMarkov sym2({{0.9, 0.1}, {0.1, 0.9}}, {0.0, 1.0});
const FiniteMarkov lazy3({{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}}, {-1.0, 0.0, 1.0});
const FiniteMarkov iid_rows3({{0.2, 0.5, 0.3}, {0.2, 0.5, 0.3}, {0.2, 0.5, 0.3}},
                             {0.0, 1.0, 2.0});
const FiniteMarkov forcing3({{0.5, 0.5, 0.0}, {0.5, 0.0, 0.5}, {0.0, 1.0, 0.0}},
                            {0.0, 1.0, 2.0});

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return out;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("psi_modulus") {
  CHECK(psi_modulus(0.3, 0.0) == 1.0);
  CHECK(psi_modulus(0.5, kPi) == Catch::Approx(0.0).margin(1e-15));
  CHECK(psi_modulus(0.25, kPi) == Catch::Approx(0.5).margin(1e-15));
  CHECK_THROWS_AS(psi_modulus(-0.1, 1.0), std::domain_error);

  // Equals the complex modulus |a e^{it} + 1 - a|; 2pi-periodic; <= 1 with
  // equality iff sin(t/2) a (1-a) = 0. Exhaustive 100x100 grid.
  for (int ia = 0; ia <= 99; ++ia) {
    const double a = ia / 99.0;
    for (int it = 0; it <= 99; ++it) {
      const double t = -2.0 * kPi + 4.0 * kPi * it / 99.0;
      const double psi = psi_modulus(a, t);
      const double direct = std::abs(a * std::polar(1.0, t) + (1.0 - a));
      CHECK(std::fabs(psi - direct) < 1e-14);
      CHECK(std::fabs(psi - psi_modulus(a, t + 2.0 * kPi)) < 1e-14);
      CHECK(psi <= 1.0 + 1e-15);
      const bool degenerate = std::fabs(std::sin(0.5 * t) * a * (1.0 - a)) < 1e-15;
      if (degenerate) {
        CHECK(psi == Catch::Approx(1.0).margin(1e-12));
      } else {
        CHECK(psi < 1.0);
      }
    }
  }
}

TEST_CASE("conditional_cf_bound_check: two-state chain") {
  const auto t_grid = linspace(-kPi, kPi, 64);
  const ConditionalCfBoundReport rep = conditional_cf_bound_check(sym2, 0.5, 0.05, 0.99, t_grid);
  CHECK(rep.xi_p == 0.0);
  CHECK(rep.g_at_xi == 0.0);
  // Hand value: pairs (0,1),(1,0) carry G = 1/2 with weight .09 each; all
  // other pairs sit outside (eps, 1-eps) at eps = .05.
  CHECK(rep.delta_hat == Catch::Approx(0.18).margin(1e-12));
  CHECK(rep.y_grid == std::vector<double>{0.0});
  CHECK(rep.min_margin >= -1e-12);
}

TEST_CASE("conditional_cf_bound_check: margins nonnegative on presets passing the hypothesis") {
  const auto t_grid = linspace(-kPi, kPi, 64);
  for (const FiniteMarkov* chain : {&sym2, &lazy3, &iid_rows3}) {
    const std::vector<double> nu = chain->stationary();
    const double xi = markov_marginal_quantile(*chain, nu, 0.5);
    const double top = chain->values.back();
    REQUIRE(xi < top);
    const double halfwidth = 0.99 * (top - xi);
    const ConditionalCfBoundReport rep = conditional_cf_bound_check(*chain, 0.5, 0.05, halfwidth, t_grid);
    CHECK(rep.min_margin >= -1e-12);
    CHECK(rep.delta_hat > 0.0);
  }
}

TEST_CASE("conditional_cf_bound_check: iid-row chain reduces to the constant-G bound") {
  // G == F(y) for every pair, so A3 has probability 1 when eps < F(y) < 1-eps
  // and the margin is |Psi_eps(t)| - |Psi_F(t)| >= 0.
  const auto t_grid = linspace(-kPi, kPi, 33);
  const ConditionalCfBoundReport rep = conditional_cf_bound_check(iid_rows3, 0.5, 0.05, 0.5, t_grid);
  CHECK(rep.delta_hat == Catch::Approx(1.0).margin(1e-12));
  const double fy = 0.7;  // F at xi_p = 1
  for (std::size_t ti = 0; ti < rep.t_grid.size(); ++ti) {
    const double expected =
        psi_modulus(0.05, rep.t_grid[ti]) - psi_modulus(fy, rep.t_grid[ti]);
    CHECK(rep.margins[0][ti] == Catch::Approx(expected).margin(1e-12));
  }
}

TEST_CASE("conditional_cf_bound_check: t = 0 margin is zero") {
  const std::vector<double> t_grid{0.0};
  for (const FiniteMarkov* chain : {&sym2, &lazy3, &iid_rows3}) {
    const ConditionalCfBoundReport rep = conditional_cf_bound_check(*chain, 0.5, 0.05, 0.5, t_grid);
    for (const auto& row : rep.margins) {
      for (double m : row) CHECK(std::fabs(m) < 1e-12);
    }
  }
}

TEST_CASE("conditional_cf_bound_check error paths") {
  const auto t_grid = linspace(-kPi, kPi, 16);
  // Hypothesis violated: forcing chain at p = 0.5 has g(xi_p) = 0.7.
  CHECK_THROWS_WITH(conditional_cf_bound_check(forcing3, 0.5, 0.05, 0.5, t_grid),
                    Catch::Matchers::ContainsSubstring("hypothesis violated"));
  // Window reaching the top state value forces delta_hat = 0 (G == 1 there).
  CHECK_THROWS_WITH(conditional_cf_bound_check(sym2, 0.5, 0.05, 1.5, t_grid),
                    Catch::Matchers::ContainsSubstring("smaller epsilon"));
  CHECK_THROWS_AS(conditional_cf_bound_check(sym2, 0.5, 0.7, 0.5, t_grid), std::domain_error);
}

TEST_CASE("taylor_residual: zero at t = 0 and enumeration cross-check") {
  const std::vector<std::size_t> n_grid{4};
  const auto t_grid = linspace(-0.9, 0.9, 9);  // includes 0, inside the n = 4 window
  const auto reports = taylor_residual(sym2, 0.5, n_grid, t_grid);
  REQUIRE(reports.size() == 1);
  const CumulantReport& rep = reports[0];

  for (std::size_t i = 0; i < rep.t_grid.size(); ++i) {
    if (rep.t_grid[i] == 0.0) CHECK(rep.residuals[i] == 0.0);
    CHECK_FALSE(rep.dropped[i]);
    // Residual recomputed from the enumerated 2^4-path law.
    const auto h_enum = testsupport::cf_enum(sym2, 0.5, 4, rep.t_grid[i]);
    const auto chi_enum = testsupport::cumulants_enum(sym2, 0.5, 4, 5);
    std::complex<double> taylor{0.0, 0.0};
    const std::complex<double> it{0.0, rep.t_grid[i]};
    std::complex<double> pow{1.0, 0.0};
    double fact = 1.0;
    for (int r = 1; r <= 5; ++r) {
      pow *= it;
      fact *= r;
      if (r >= 2) taylor += pow / fact * chi_enum[r - 1];
    }
    // |t| <= 1 keeps the phase on the principal branch for n = 4.
    const double expected = std::abs(std::log(h_enum) - taylor);
    CHECK(rep.residuals[i] == Catch::Approx(expected).margin(1e-12));
  }
}

TEST_CASE("taylor_residual: scaled residual does not grow and decays in median") {
  const std::vector<std::size_t> n_grid{64, 128, 256, 512, 1024, 2048, 4096};
  const auto t_grid = linspace(-1.5, 1.5, 13);
  const auto reports = taylor_residual(iid_rows3, 0.5, n_grid, t_grid);

  // No growth: scaled residual at each n stays within 8x of the first n.
  double first_max = 0.0;
  for (std::size_t i = 0; i < reports[0].scaled.size(); ++i) {
    first_max = std::max(first_max, reports[0].scaled[i]);
  }
  for (const auto& rep : reports) {
    double m = 0.0;
    for (double s : rep.scaled) m = std::max(m, s);
    CHECK(m <= 8.0 * first_max);
  }

  // Median residual at fixed small t decreases when n doubles.
  for (std::size_t i = 0; i + 1 < reports.size(); ++i) {
    std::vector<double> a(reports[i].residuals), b(reports[i + 1].residuals);
    std::nth_element(a.begin(), a.begin() + a.size() / 2, a.end());
    std::nth_element(b.begin(), b.begin() + b.size() / 2, b.end());
    CHECK(b[b.size() / 2] <= a[a.size() / 2] * 1.05);
  }
}

TEST_CASE("taylor_residual: tracked log reconstructs the CF") {
  const std::vector<std::size_t> n_grid{64, 256};
  const auto t_grid = linspace(-2.0, 2.0, 21);
  const auto reports = taylor_residual(sym2, 0.5, n_grid, t_grid);
  for (const auto& rep : reports) {
    const MarkovCfContext ctx(sym2, 0.5, rep.n);
    for (std::size_t i = 0; i < rep.t_grid.size(); ++i) {
      const auto reconstructed = std::exp(rep.log_h[i]);
      CHECK(std::abs(reconstructed - ctx.cf(rep.t_grid[i]).value) < 1e-10);
    }
  }
}

TEST_CASE("taylor_residual: window precondition enforced") {
  const std::vector<std::size_t> n_grid{64};
  CHECK_THROWS_AS(taylor_residual(sym2, 0.5, n_grid, {5.0}), std::domain_error);
  CHECK_THROWS_AS(taylor_residual(sym2, 0.5, {}, {0.5}), std::domain_error);
}

TEST_CASE("cf_envelope") {
  const auto t_grid = linspace(-6.0, 6.0, 121);
  const CfEnvelopeReport rep = cf_envelope(sym2, 0.5, 128, t_grid);
  for (std::size_t i = 0; i < rep.t_grid.size(); ++i) {
    CHECK(rep.modulus[i] <= 1.0 + 1e-12);
    if (rep.t_grid[i] == 0.0) CHECK(rep.modulus[i] == Catch::Approx(1.0).margin(1e-13));
  }
  // Conjugate symmetry of the modulus.
  for (std::size_t i = 0; i < rep.t_grid.size() / 2; ++i) {
    CHECK(std::fabs(rep.modulus[i] - rep.modulus[rep.t_grid.size() - 1 - i]) < 1e-14);
  }

  // Fair-coin iid-row chain: H_n(t) = cos(t/sqrt(n))^n exactly.
  const FiniteMarkov fair({{0.5, 0.5}, {0.5, 0.5}}, {0.0, 1.0});
  const std::size_t n = 64;
  const CfEnvelopeReport coin = cf_envelope(fair, 0.5, n, t_grid);
  for (std::size_t i = 0; i < coin.t_grid.size(); ++i) {
    const double expected = std::fabs(
        std::pow(std::cos(coin.t_grid[i] / std::sqrt(static_cast<double>(n))),
                 static_cast<double>(n)));
    CHECK(coin.modulus[i] == Catch::Approx(expected).margin(1e-12));
  }
}
