#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qrate/experiments.hpp"
#include "qrate/report_io.hpp"

using namespace qrate;

namespace {

const FiniteMarkov lazy3({{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}}, {-1.0, 0.0, 1.0});
const FiniteMarkov iid_rows2({{0.3, 0.7}, {0.3, 0.7}}, {0.0, 1.0});

}  // namespace

TEST_CASE("fit_loglog_slope") {
  // Exact power laws pass through the fitter unchanged.
  std::vector<std::pair<double, double>> half, one;
  for (double n : {100.0, 200.0, 400.0, 800.0}) {
    half.emplace_back(n, 3.0 / std::sqrt(n));
    one.emplace_back(n, 0.7 / n);
  }
  const SlopeFit f1 = fit_loglog_slope(half);
  CHECK(f1.slope == Catch::Approx(-0.5).margin(1e-12));
  CHECK(f1.intercept == Catch::Approx(std::log(3.0)).margin(1e-12));
  CHECK(f1.stderr_slope == Catch::Approx(0.0).margin(1e-12));
  CHECK(fit_loglog_slope(one).slope == Catch::Approx(-1.0).margin(1e-12));

  // Two points: the secant.
  const SlopeFit sec = fit_loglog_slope({{100.0, 0.1}, {400.0, 0.04}});
  CHECK(sec.slope ==
        Catch::Approx(std::log(0.04 / 0.1) / std::log(4.0)).margin(1e-12));
  CHECK(sec.stderr_slope == 0.0);

  // Three points with hand-computed OLS: x = (0, ln4, ln16) reduces to a
  // quadratic fit done by hand in logs.
  const std::vector<std::pair<double, double>> pts{{1.0, 1.0}, {4.0, 0.4}, {16.0, 0.2}};
  // ybar = (ln 1 + ln .4 + ln .2)/3, slope = sxy/sxx with xs 0, ln4, 2 ln4.
  const double l4 = std::log(4.0);
  const double y0 = 0.0, y1 = std::log(0.4), y2 = std::log(0.2);
  const double xbar = l4, ybar = (y0 + y1 + y2) / 3.0;
  const double sxx = 2.0 * l4 * l4;
  const double sxy = (0.0 - xbar) * (y0 - ybar) + 0.0 + (2.0 * l4 - xbar) * (y2 - ybar);
  const SlopeFit f3 = fit_loglog_slope(pts);
  CHECK(f3.slope == Catch::Approx(sxy / sxx).margin(1e-12));

  CHECK_THROWS_AS(fit_loglog_slope({{100.0, 0.1}}), std::domain_error);
  CHECK_THROWS_AS(fit_loglog_slope({{100.0, 0.1}, {200.0, 0.0}}), std::domain_error);
}

TEST_CASE("run_rate_exact_iid: generic quantiles decay at the root-n rate") {
  // Away from the symmetric-median case the first-order term is present and
  // the exact distance tracks n^{-1/2} tightly.
  for (double p : {0.75, 0.9}) {
    RateExperimentConfig config;
    config.model = IidModel{MarginalLaw::uniform01()};
    config.p = p;
    config.mode = RateMode::exact_iid;
    config.n_grid = {101, 201, 401, 801};
    const RateReport report = run_rate_exact_iid(config);
    CHECK(report.fit.slope > -0.6);
    CHECK(report.fit.slope < -0.4);
    double mx = 0.0, mn = 1e300;
    for (const auto& pt : report.points) {
      mx = std::max(mx, pt.sqrt_n_delta);
      mn = std::min(mn, pt.sqrt_n_delta);
    }
    CHECK(mx / mn <= 3.0);
  }
}

TEST_CASE("run_rate_exact_iid: symmetric median is a degenerate fast case") {
  // Uniform marginal, p = 1/2, odd n: the sample median follows a symmetric
  // Beta law, the skewness term cancels, and the exact distance decays like
  // n^{-1}. Integer np (even n) restores the n^{-1/2} tie offset.
  RateExperimentConfig config;
  config.model = IidModel{MarginalLaw::uniform01()};
  config.p = 0.5;
  config.mode = RateMode::exact_iid;
  config.n_grid = {101, 201, 401, 801};
  const RateReport odd = run_rate_exact_iid(config);
  CHECK(odd.fit.slope == Catch::Approx(-1.0).margin(0.05));

  config.n_grid = {100, 200, 400, 800};
  const RateReport even = run_rate_exact_iid(config);
  CHECK(even.fit.slope == Catch::Approx(-0.5).margin(0.05));

  // Monotone sanity: nonincreasing up to at most one adjacent inversion.
  for (const RateReport* rep : {&odd, &even}) {
    std::size_t inversions = 0;
    for (std::size_t i = 1; i < rep->points.size(); ++i) {
      if (rep->points[i].delta > rep->points[i - 1].delta) ++inversions;
    }
    CHECK(inversions <= 1);
  }

  // Deterministic: bytes agree across repeated runs and thread counts.
  RateExperimentConfig threaded = config;
  threaded.threads = 4;
  CHECK(rate_report_csv(run_rate_exact_iid(threaded)) == rate_report_csv(even));

  RateExperimentConfig bad = config;
  bad.n_grid = {101};
  CHECK_THROWS_AS(run_rate_exact_iid(bad), config_error);
  bad = config;
  bad.model = FiniteMarkov({{1.0}}, {0.0});
  CHECK_THROWS_AS(run_rate_exact_iid(bad), config_error);
}

TEST_CASE("run_rate_exact_markov: iid rows equal the binomial lattice distance") {
  RateExperimentConfig config;
  config.model = iid_rows2;
  config.p = 0.25;  // xi_p = 0, gap midpoint y = 0.5, F(y) = 0.3
  config.mode = RateMode::exact_markov;
  config.n_grid = {16, 32, 64};
  const RateReport report = run_rate_exact_markov(config);
  for (const auto& pt : report.points) {
    // Independent binomial route.
    std::vector<double> pmf(pt.n + 1);
    double prev = 1.0;
    for (std::size_t k = 0; k <= pt.n; ++k) {
      const double next =
          binomial_upper_tail(static_cast<std::int64_t>(pt.n), 0.3, static_cast<std::int64_t>(k) + 1);
      pmf[k] = prev - next;
      prev = next;
    }
    const CountDistribution bin(pt.n, pmf);
    const double mu = 0.3 * static_cast<double>(pt.n);
    const double sigma = std::sqrt(0.21 * static_cast<double>(pt.n));
    CHECK(pt.delta ==
          Catch::Approx(lattice_kolmogorov_distance(bin, mu, sigma)).margin(1e-12));
  }

  // Identity chain: Dobrushin coefficient 1 is rejected.
  RateExperimentConfig bad = config;
  bad.model = FiniteMarkov({{1.0, 0.0}, {0.0, 1.0}}, {0.0, 1.0});
  CHECK_THROWS_AS(run_rate_exact_markov(bad), std::domain_error);
}

TEST_CASE("run_rate_exact_markov: lazy3 decays at the root-n rate") {
  RateExperimentConfig config;
  config.model = lazy3;
  config.p = 0.5;
  config.mode = RateMode::exact_markov;
  config.n_grid = {64, 128, 256};
  const RateReport report = run_rate_exact_markov(config);
  CHECK(report.fit.slope > -0.8);
  CHECK(report.fit.slope < -0.2);
}

TEST_CASE("run_rate_monte_carlo: determinism across thread counts") {
  RateExperimentConfig config;
  config.model = DoeblinCopulaModel(MarginalLaw::std_normal(), 0.6, 0.7);
  config.p = 0.5;
  config.mode = RateMode::monte_carlo;
  config.n_grid = {64, 128};
  config.replicates = 300;
  config.master_seed = 99;

  config.threads = 1;
  const std::string csv1 = rate_report_csv(run_rate_monte_carlo(config));
  config.threads = 4;
  const std::string csv4 = rate_report_csv(run_rate_monte_carlo(config));
  config.threads = 8;
  const std::string csv8 = rate_report_csv(run_rate_monte_carlo(config));
  CHECK(csv1 == csv4);
  CHECK(csv1 == csv8);

  RateExperimentConfig bad = config;
  bad.replicates = 50;
  CHECK_THROWS_AS(run_rate_monte_carlo(bad), config_error);
}

TEST_CASE("run_rate_monte_carlo agrees with the exact iid distance") {
  const std::size_t n = 256, reps = 2000;
  RateExperimentConfig mc;
  mc.model = IidModel{MarginalLaw::uniform01()};
  mc.p = 0.5;
  mc.mode = RateMode::monte_carlo;
  mc.n_grid = {n, 2 * n};
  mc.replicates = reps;
  mc.master_seed = 7;
  mc.threads = 2;
  const RateReport mc_report = run_rate_monte_carlo(mc);

  RateExperimentConfig exact = mc;
  exact.mode = RateMode::exact_iid;
  const RateReport exact_report = run_rate_exact_iid(exact);

  // Grid bias of the exact mode is tiny; the MC noise floor dominates.
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::fabs(mc_report.points[i].delta - exact_report.points[i].delta) <
          3.0 * (1.0 / std::sqrt(static_cast<double>(reps)) + 0.01));
  }
}

TEST_CASE("run_coverage basics") {
  CoverageConfig config;
  config.model = IidModel{MarginalLaw::uniform01()};
  config.p = 0.5;
  config.level = 0.5;
  config.n = 512;
  config.replicates = 2000;
  config.master_seed = 31;
  config.threads = 2;
  const CoverageReport report = run_coverage(config);
  CHECK(report.coverage > 0.45);
  CHECK(report.coverage < 0.55);
  CHECK(report.plugin_failures == 0);
  CHECK(report.width_mean > 0.0);
  CHECK(report.width_median > 0.0);

  // R = 1: coverage is 0 or 1.
  CoverageConfig single = config;
  single.replicates = 1;
  const CoverageReport one = run_coverage(single);
  CHECK((one.coverage == 0.0 || one.coverage == 1.0));

  // Determinism across thread counts.
  CoverageConfig t1 = config;
  t1.replicates = 300;
  t1.threads = 1;
  CoverageConfig t8 = t1;
  t8.threads = 8;
  CHECK(coverage_report_csv(run_coverage(t1)) == coverage_report_csv(run_coverage(t8)));

  // Degenerate data makes every plug-in fail, which aborts the experiment.
  CoverageConfig degenerate = config;
  degenerate.model = FiniteMarkov({{1.0}}, {0.0});
  degenerate.replicates = 40;
  CHECK_THROWS_WITH(run_coverage(degenerate),
                    Catch::Matchers::ContainsSubstring("plug-in failure rate"));
}

TEST_CASE("check_conditions verdicts") {
  // Identity transition: kernel contraction and mixing fail.
  const ConditionReport identity =
      check_conditions(FiniteMarkov({{1.0, 0.0}, {0.0, 1.0}}, {0.0, 1.0}), 0.5);
  bool saw28 = false;
  for (const auto& item : identity.items) {
    if (item.id == "kernel-contraction") {
      saw28 = true;
      CHECK(item.verdict == "FAIL");
    }
  }
  CHECK(saw28);
  CHECK_FALSE(identity.all_pass);

  // Doeblin copula: nondegeneracy passes by the regeneration argument.
  const ConditionReport doeblin =
      check_conditions(DoeblinCopulaModel(MarginalLaw::std_normal(), 0.6, 0.7), 0.5);
  for (const auto& item : doeblin.items) {
    CHECK(item.verdict == "PASS");
  }
  CHECK(doeblin.all_pass);

  // Full-support 3-state chain at p = 0.5: nondegeneracy passes with g = 0
  // exactly, but the density condition fails (discrete marginal).
  const ConditionReport markov = check_conditions(lazy3, 0.5);
  for (const auto& item : markov.items) {
    if (item.id == "nondegeneracy") {
      CHECK(item.verdict == "PASS");
      CHECK(item.detail.find("g(xi_p) = 0") != std::string::npos);
    }
    if (item.id == "density") CHECK(item.verdict == "FAIL");
  }
  CHECK_FALSE(markov.all_pass);

  // Gaussian MA: spectral positivity backs nondegeneracy.
  const ConditionReport ma =
      check_conditions(GaussianMaModel({1.0, 0.5}, MarginalLaw::std_normal()), 0.5);
  CHECK(ma.all_pass);
}

TEST_CASE("report serialization round trips") {
  RateExperimentConfig config;
  config.model = IidModel{MarginalLaw::uniform01()};
  config.mode = RateMode::exact_iid;
  config.n_grid = {101, 201, 401};
  const RateReport report = run_rate_exact_iid(config);

  // CSV: parse then re-serialize, byte-identical; slope refit matches.
  const std::string csv = rate_report_csv(report);
  const RateReport back = parse_rate_report_csv(csv);
  CHECK(rate_report_csv(back) == csv);
  CHECK(back.fit.slope == Catch::Approx(report.fit.slope).margin(1e-14));

  // JSON: full field round trip.
  const auto j = rate_report_json(report);
  const RateReport jback = parse_rate_report_json(j);
  CHECK(rate_report_json(jback) == j);

  CoverageConfig cc;
  cc.model = IidModel{MarginalLaw::uniform01()};
  cc.n = 256;
  cc.replicates = 100;
  const CoverageReport cov = run_coverage(cc);
  const std::string ccsv = coverage_report_csv(cov);
  CHECK(coverage_report_csv(parse_coverage_report_csv(ccsv)) == ccsv);
  const auto cj = coverage_report_json(cov);
  CHECK(coverage_report_json(parse_coverage_report_json(cj)) == cj);

  CHECK_THROWS_AS(parse_rate_report_csv("bogus\n"), config_error);
}

TEST_CASE("svg plot is generated") {
  RateExperimentConfig config;
  config.model = IidModel{MarginalLaw::uniform01()};
  config.mode = RateMode::exact_iid;
  config.n_grid = {101, 201};
  const RateReport report = run_rate_exact_iid(config);
  const std::string svg = rate_report_svg(report);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("circle") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}
