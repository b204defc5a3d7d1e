// qrate — quantile inference and Berry–Esseen rate experiments for weakly
// dependent time series.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qrate/experiments.hpp"
#include "qrate/model_spec.hpp"
#include "qrate/report_io.hpp"
#include "qrate/theory.hpp"

namespace {

using namespace qrate;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitResource = 4;

struct CommonArgs {
  std::string model_path;
  double p = 0.5;
  std::string mode = "exact-iid";
  std::vector<std::size_t> n_grid;
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
  std::string format = "csv";
  std::string plot;
};

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::fputs(content.c_str(), stdout);
  } else {
    write_text_file(out_path, content);
  }
}

ProcessModel require_model(const CommonArgs& args) {
  if (args.model_path.empty()) throw config_error("--model <file> is required");
  return load_model_spec(args.model_path);
}

const FiniteMarkov& require_chain(const ProcessModel& model) {
  const auto* chain = std::get_if<FiniteMarkov>(&model);
  if (chain == nullptr) throw config_error("this command requires a finite_markov model");
  return *chain;
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return out;
}

/// Largest symmetric window around the stationary quantile that keeps the top
/// state value out (where G_0 is identically 1 and the bound's infimum would
/// vanish by construction).
double default_bound_window(const FiniteMarkov& chain, double p) {
  const std::vector<double> nu = chain.stationary();
  const double xi = markov_marginal_quantile(chain, nu, p);
  const double top = chain.values.back();
  if (!(xi < top)) {
    throw std::domain_error("cf-bound: quantile sits at the top state value");
  }
  return 0.99 * (top - xi);
}

int run_simulate(const CommonArgs& args, std::size_t n) {
  const ProcessModel model = require_model(args);
  if (n == 0) {
    if (args.n_grid.empty()) throw config_error("simulate: --n (or --n-grid) is required");
    n = args.n_grid.front();
  }
  const TimeSeries ts = simulate(model, n, args.seed);
  emit(args.out, args.format == "json" ? series_json(ts).dump(2) + "\n" : series_csv(ts));
  return kExitOk;
}

int run_estimate(const CommonArgs& args, std::size_t n, double level, const std::string& data,
                 bool analytic, std::optional<double> bandwidth,
                 std::optional<std::size_t> lags) {
  TimeSeries ts;
  ProcessModel model;
  bool have_model = false;
  if (!args.model_path.empty()) {
    model = load_model_spec(args.model_path);
    have_model = true;
  }
  if (!data.empty()) {
    std::ifstream in(data);
    if (!in) throw config_error("estimate: cannot open data file \"" + data + "\"");
    double v = 0.0;
    while (in >> v) ts.values.push_back(v);
    ts.model_id = "data:" + data;
  } else {
    if (!have_model) throw config_error("estimate: need --data or --model");
    if (n == 0) {
      if (args.n_grid.empty()) throw config_error("estimate: --n (or --n-grid) is required");
      n = args.n_grid.front();
    }
    ts = simulate(model, n, args.seed);
  }

  EstimateOptions options;
  options.bandwidth = bandwidth;
  options.lags = lags;
  ModelFacts facts;
  if (analytic) {
    if (!have_model) throw config_error("estimate: --analytic requires --model");
    facts = model_facts(model, args.p);
    options.facts = &facts;
  }
  const QuantileEstimate est = estimate_quantile_ci(ts, args.p, level, options);
  emit(args.out, args.format == "json" ? estimate_json(est).dump(2) + "\n" : estimate_csv(est));
  return kExitOk;
}

int run_rate_cmd(const CommonArgs& args, double x_range_mult, std::size_t x_points,
                 std::size_t memory_cap_mb) {
  RateExperimentConfig config;
  config.model = require_model(args);
  config.p = args.p;
  config.mode = parse_rate_mode(args.mode);
  config.n_grid = args.n_grid;
  config.replicates = args.replicates;
  config.master_seed = args.seed;
  config.threads = args.threads;
  config.x_grid.range_multiplier = x_range_mult;
  config.x_grid.points = x_points;
  config.memory_cap_bytes = memory_cap_mb * std::size_t{1024} * 1024;

  const RateReport report = run_rate(config);
  emit(args.out,
       args.format == "json" ? rate_report_json(report).dump(2) + "\n" : rate_report_csv(report));
  if (!args.plot.empty()) write_text_file(args.plot, rate_report_svg(report));
  return kExitOk;
}

int run_coverage_cmd(const CommonArgs& args, std::size_t n, double level) {
  CoverageConfig config;
  config.model = require_model(args);
  config.p = args.p;
  config.level = level;
  config.n = n;
  config.replicates = args.replicates;
  config.master_seed = args.seed;
  config.threads = args.threads;
  const CoverageReport report = run_coverage(config);
  emit(args.out, args.format == "json" ? coverage_report_json(report).dump(2) + "\n"
                                       : coverage_report_csv(report));
  return kExitOk;
}

int run_check_conditions(const CommonArgs& args) {
  const ProcessModel model = require_model(args);
  const ConditionReport report = check_conditions(model, args.p);
  emit(args.out, args.format == "json" ? condition_report_json(report).dump(2) + "\n"
                                       : condition_report_csv(report));
  return report.all_pass ? kExitOk : kExitPrecondition;
}

int run_theory(const CommonArgs& args, const std::string& check, double epsilon, double window,
               std::size_t t_points, double t_max, double y_override, bool y_set) {
  const ProcessModel model = require_model(args);
  const FiniteMarkov& chain = require_chain(model);

  if (check == "cf-bound") {
    const double w = window > 0.0 ? window : default_bound_window(chain, args.p);
    const double tm = t_max > 0.0 ? t_max : kTwoPi / 2.0;
    const ConditionalCfBoundReport report =
        conditional_cf_bound_check(chain, args.p, epsilon, w, linspace(-tm, tm, t_points));
    emit(args.out, cf_bound_report_csv(report));
    std::fprintf(stderr, "cf-bound: delta_hat=%g min_margin=%g over %zu y x %zu t points\n",
                 report.delta_hat, report.min_margin, report.y_grid.size(),
                 report.t_grid.size());
    return report.min_margin >= -1e-12 ? kExitOk : kExitPrecondition;
  }

  const std::vector<double> nu = chain.stationary();
  const double y = y_set ? y_override : markov_gap_midpoint(chain, args.p);
  if (check == "taylor") {
    std::vector<std::size_t> n_grid = args.n_grid;
    if (n_grid.empty()) n_grid = {64, 128, 256, 512, 1024};
    double tm = t_max;
    if (!(tm > 0.0)) {
      tm = taylor_t_window(n_grid.front()) * 0.95;
    }
    const auto reports = taylor_residual(chain, y, n_grid, linspace(-tm, tm, t_points));
    emit(args.out, cumulant_reports_csv(reports));
    return kExitOk;
  }
  if (check == "envelope") {
    std::vector<std::size_t> n_grid = args.n_grid;
    if (n_grid.empty()) n_grid = {256};
    const double tm = t_max > 0.0 ? t_max : 6.0;
    std::string out = "t,n,value,margin\n";
    for (std::size_t n : n_grid) {
      const CfEnvelopeReport rep = cf_envelope(chain, y, n, linspace(-tm, tm, t_points));
      const std::string body = envelope_report_csv(rep);
      out += body.substr(body.find('\n') + 1);
    }
    emit(args.out, out);
    return kExitOk;
  }
  throw config_error("theory: --check must be cf-bound, taylor or envelope");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile inference and Berry-Esseen rate experiments for weakly dependent "
               "stationary time series"};
  app.require_subcommand(1);

  CommonArgs args;
  std::size_t n = 0;
  double level = 0.95;
  std::string data_path;
  bool analytic = false;
  double bandwidth = 0.0;
  long long lags = -1;
  double x_range_mult = 8.0;
  std::size_t x_points = 2001;
  std::size_t memory_cap_mb = 2048;
  std::string check = "cf-bound";
  double epsilon = 0.05;
  double window = 0.0;
  std::size_t t_points = 64;
  double t_max = 0.0;
  double y_override = 0.0;

  const auto add_common = [&](CLI::App* cmd, bool with_mode = false) {
    cmd->add_option("--model", args.model_path, "model-spec JSON file");
    cmd->add_option("--p", args.p, "quantile level in (0,1)");
    if (with_mode) {
      cmd->add_option("--mode", args.mode, "exact-iid | exact-markov | mc");
    }
    cmd->add_option("--n-grid", args.n_grid, "comma-separated sample sizes")->delimiter(',');
    cmd->add_option("--replicates", args.replicates, "Monte Carlo replicates");
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_option("--threads", args.threads, "worker count");
    cmd->add_option("--out", args.out, "output path (default: stdout)");
    cmd->add_option("--format", args.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--plot", args.plot, "write an SVG plot to this path");
  };

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "generate a sample from a model");
  add_common(simulate_cmd);
  simulate_cmd->add_option("--n", n, "sample length");

  CLI::App* estimate_cmd =
      app.add_subcommand("estimate", "quantile point estimate and confidence interval");
  add_common(estimate_cmd);
  estimate_cmd->add_option("--n", n, "sample length when simulating");
  estimate_cmd->add_option("--level", level, "confidence level");
  estimate_cmd->add_option("--data", data_path, "text file with one value per line");
  estimate_cmd->add_flag("--analytic", analytic, "use analytic model facts for the variance");
  estimate_cmd->add_option("--bandwidth", bandwidth, "KDE bandwidth override");
  estimate_cmd->add_option("--lags", lags, "Bartlett window lag override");

  CLI::App* rate_cmd = app.add_subcommand("rate", "Berry-Esseen rate experiment");
  add_common(rate_cmd, true);
  rate_cmd->add_option("--x-range-mult", x_range_mult, "x grid range in tau units");
  rate_cmd->add_option("--x-points", x_points, "x grid point count");
  rate_cmd->add_option("--memory-cap-mb", memory_cap_mb, "DP memory cap in MiB");

  CLI::App* coverage_cmd = app.add_subcommand("coverage", "CI coverage experiment");
  add_common(coverage_cmd);
  coverage_cmd->add_option("--n", n, "sample length per replicate");
  coverage_cmd->add_option("--level", level, "nominal confidence level");

  CLI::App* check_cmd =
      app.add_subcommand("check-conditions", "verify the regularity conditions for a model");
  add_common(check_cmd);

  CLI::App* theory_cmd =
      app.add_subcommand("theory", "conditional-CF and cumulant checks on finite Markov models");
  add_common(theory_cmd);
  theory_cmd->add_option("--check", check, "cf-bound | taylor | envelope");
  theory_cmd->add_option("--epsilon", epsilon, "cf-bound epsilon in (0, 1/2)");
  theory_cmd->add_option("--window", window, "cf-bound y-window half-width (default: auto)");
  theory_cmd->add_option("--t-points", t_points, "t grid point count");
  theory_cmd->add_option("--t-max", t_max, "t grid half-range (default: per check)");
  CLI::Option* yopt = theory_cmd->add_option("--y", y_override, "threshold y (default: auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (simulate_cmd->parsed()) return run_simulate(args, n);
    if (estimate_cmd->parsed()) {
      return run_estimate(args, n, level, data_path, analytic,
                          bandwidth > 0.0 ? std::optional<double>(bandwidth) : std::nullopt,
                          lags >= 0 ? std::optional<std::size_t>(static_cast<std::size_t>(lags))
                                    : std::nullopt);
    }
    if (rate_cmd->parsed()) return run_rate_cmd(args, x_range_mult, x_points, memory_cap_mb);
    if (coverage_cmd->parsed()) return run_coverage_cmd(args, n, level);
    if (check_cmd->parsed()) return run_check_conditions(args);
    if (theory_cmd->parsed()) {
      return run_theory(args, check, epsilon, window, t_points, t_max, y_override,
                        yopt->count() > 0);
    }
  } catch (const config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const resource_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitResource;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitPrecondition;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return kExitConfig;
}
