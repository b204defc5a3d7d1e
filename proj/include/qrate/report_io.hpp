#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrate/errors.hpp"
#include "qrate/estimators.hpp"
#include "qrate/experiments.hpp"
#include "qrate/theory.hpp"

namespace qrate {
namespace detail {

/// Shortest-exact decimal for a double (%.17g round-trips bit-exactly).
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  return out;
}

}  // namespace detail

// ---- rate reports ---------------------------------------------------------
// CSV schema (fixed, versioned by column set): mode,n,delta,sqrt_n_delta,seed

inline std::string rate_report_csv(const RateReport& report) {
  std::string out = "mode,n,delta,sqrt_n_delta,seed\n";
  for (const auto& pt : report.points) {
    out += report.mode + "," + std::to_string(pt.n) + "," + detail::fmt_double(pt.delta) + "," +
           detail::fmt_double(pt.sqrt_n_delta) + "," + std::to_string(report.seed) + "\n";
  }
  return out;
}

inline RateReport parse_rate_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "mode,n,delta,sqrt_n_delta,seed") {
    throw config_error("rate CSV: unexpected header");
  }
  RateReport report;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 5) throw config_error("rate CSV: malformed row");
    report.mode = fields[0];
    RatePoint pt;
    pt.n = std::stoull(fields[1]);
    pt.delta = std::stod(fields[2]);
    pt.sqrt_n_delta = std::stod(fields[3]);
    report.seed = std::stoull(fields[4]);
    report.points.push_back(pt);
  }
  if (report.points.size() >= 2) report.fit = detail::fit_points(report.points);
  return report;
}

inline nlohmann::json rate_report_json(const RateReport& report) {
  nlohmann::json j;
  j["mode"] = report.mode;
  j["p"] = report.p;
  j["seed"] = report.seed;
  j["slope"] = report.fit.slope;
  j["intercept"] = report.fit.intercept;
  j["slope_stderr"] = report.fit.stderr_slope;
  if (report.mode == "mc") j["mc_noise_floor"] = report.mc_noise_floor;
  j["points"] = nlohmann::json::array();
  for (const auto& pt : report.points) {
    j["points"].push_back(
        {{"n", pt.n}, {"delta", pt.delta}, {"sqrt_n_delta", pt.sqrt_n_delta}});
  }
  return j;
}

inline RateReport parse_rate_report_json(const nlohmann::json& j) {
  RateReport report;
  report.mode = j.at("mode").get<std::string>();
  report.p = j.at("p").get<double>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.mc_noise_floor = j.value("mc_noise_floor", 0.0);
  for (const auto& pj : j.at("points")) {
    report.points.push_back({pj.at("n").get<std::size_t>(), pj.at("delta").get<double>(),
                             pj.at("sqrt_n_delta").get<double>()});
  }
  if (report.points.size() >= 2) report.fit = detail::fit_points(report.points);
  return report;
}

// ---- coverage reports ------------------------------------------------------
// CSV schema: level,n,R,covered,width_mean,width_median

inline std::string coverage_report_csv(const CoverageReport& report) {
  return "level,n,R,covered,width_mean,width_median\n" + detail::fmt_double(report.level) + "," +
         std::to_string(report.n) + "," + std::to_string(report.replicates) + "," +
         detail::fmt_double(report.coverage) + "," + detail::fmt_double(report.width_mean) + "," +
         detail::fmt_double(report.width_median) + "\n";
}

inline CoverageReport parse_coverage_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "level,n,R,covered,width_mean,width_median") {
    throw config_error("coverage CSV: unexpected header");
  }
  if (!std::getline(in, line)) throw config_error("coverage CSV: missing row");
  const auto fields = detail::split_csv_line(line);
  if (fields.size() != 6) throw config_error("coverage CSV: malformed row");
  CoverageReport report;
  report.level = std::stod(fields[0]);
  report.n = std::stoull(fields[1]);
  report.replicates = std::stoull(fields[2]);
  report.coverage = std::stod(fields[3]);
  report.width_mean = std::stod(fields[4]);
  report.width_median = std::stod(fields[5]);
  return report;
}

inline nlohmann::json coverage_report_json(const CoverageReport& report) {
  return {{"level", report.level},
          {"n", report.n},
          {"R", report.replicates},
          {"covered", report.coverage},
          {"width_mean", report.width_mean},
          {"width_median", report.width_median},
          {"binomial_stderr", report.binomial_stderr},
          {"plugin_failures", report.plugin_failures},
          {"seed", report.seed}};
}

inline CoverageReport parse_coverage_report_json(const nlohmann::json& j) {
  CoverageReport report;
  report.level = j.at("level").get<double>();
  report.n = j.at("n").get<std::size_t>();
  report.replicates = j.at("R").get<std::size_t>();
  report.coverage = j.at("covered").get<double>();
  report.width_mean = j.at("width_mean").get<double>();
  report.width_median = j.at("width_median").get<double>();
  report.binomial_stderr = j.at("binomial_stderr").get<double>();
  report.plugin_failures = j.at("plugin_failures").get<std::size_t>();
  report.seed = j.at("seed").get<std::uint64_t>();
  return report;
}

// ---- condition reports -----------------------------------------------------

inline std::string condition_report_csv(const ConditionReport& report) {
  std::string out = "condition,verdict,detail\n";
  for (const auto& item : report.items) {
    std::string detail = item.detail;
    for (char& c : detail) {
      if (c == ',') c = ';';
    }
    out += item.id + "," + item.verdict + "," + detail + "\n";
  }
  return out;
}

inline nlohmann::json condition_report_json(const ConditionReport& report) {
  nlohmann::json j;
  j["all_pass"] = report.all_pass;
  j["conditions"] = nlohmann::json::array();
  for (const auto& item : report.items) {
    j["conditions"].push_back(
        {{"id", item.id}, {"verdict", item.verdict}, {"detail", item.detail}});
  }
  return j;
}

// ---- theory reports --------------------------------------------------------
// CSV schema shared by the theory checks: t,n,value,margin

inline std::string cf_bound_report_csv(const ConditionalCfBoundReport& report) {
  std::string out = "t,n,value,margin\n";
  for (std::size_t yi = 0; yi < report.y_grid.size(); ++yi) {
    for (std::size_t ti = 0; ti < report.t_grid.size(); ++ti) {
      // n column carries the y index for the cf-bound report (single-chain check).
      out += detail::fmt_double(report.t_grid[ti]) + "," + std::to_string(yi) + "," +
             detail::fmt_double(report.value[yi][ti]) + "," +
             detail::fmt_double(report.margins[yi][ti]) + "\n";
    }
  }
  return out;
}

inline std::string cumulant_reports_csv(const std::vector<CumulantReport>& reports) {
  std::string out = "t,n,value,margin\n";
  for (const auto& rep : reports) {
    for (std::size_t i = 0; i < rep.t_grid.size(); ++i) {
      if (rep.dropped[i]) continue;
      out += detail::fmt_double(rep.t_grid[i]) + "," + std::to_string(rep.n) + "," +
             detail::fmt_double(rep.residuals[i]) + "," + detail::fmt_double(rep.scaled[i]) +
             "\n";
    }
  }
  return out;
}

inline std::string envelope_report_csv(const CfEnvelopeReport& report) {
  std::string out = "t,n,value,margin\n";
  for (std::size_t i = 0; i < report.t_grid.size(); ++i) {
    out += detail::fmt_double(report.t_grid[i]) + "," + std::to_string(report.n) + "," +
           detail::fmt_double(report.modulus[i]) + "," +
           detail::fmt_double(report.gauss_ratio[i]) + "\n";
  }
  return out;
}

// ---- series and estimates ---------------------------------------------------

inline std::string series_csv(const TimeSeries& ts) {
  std::string out = "value\n";
  for (double v : ts.values) out += detail::fmt_double(v) + "\n";
  return out;
}

inline nlohmann::json series_json(const TimeSeries& ts) {
  return {{"model_id", ts.model_id}, {"seed", ts.seed}, {"values", ts.values}};
}

inline std::string estimate_csv(const QuantileEstimate& est) {
  return "point,f_hat,sigma2_hat,tau2_hat,ci_lo,ci_hi,level,n\n" +
         detail::fmt_double(est.point) + "," + detail::fmt_double(est.f_hat) + "," +
         detail::fmt_double(est.sigma2_hat) + "," + detail::fmt_double(est.tau2_hat) + "," +
         detail::fmt_double(est.ci_lo) + "," + detail::fmt_double(est.ci_hi) + "," +
         detail::fmt_double(est.level) + "," + std::to_string(est.n) + "\n";
}

inline nlohmann::json estimate_json(const QuantileEstimate& est) {
  return {{"point", est.point},     {"f_hat", est.f_hat},
          {"sigma2_hat", est.sigma2_hat}, {"tau2_hat", est.tau2_hat},
          {"ci_lo", est.ci_lo},     {"ci_hi", est.ci_hi},
          {"level", est.level},     {"n", est.n},
          {"plug_in", est.plug_in}};
}

// ---- SVG plot ---------------------------------------------------------------

/// Log-log scatter of (n, Δ_n) with the fitted line. Output-only.
inline std::string rate_report_svg(const RateReport& report) {
  const double width = 640, height = 480, margin = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& pt : report.points) {
    const double x = std::log10(static_cast<double>(pt.n));
    const double y = std::log10(std::max(pt.delta, 1e-300));
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const double padx = 0.05 * (xmax - xmin), pady = 0.10 * (ymax - ymin);
  xmin -= padx;
  xmax += padx;
  ymin -= pady;
  ymax += pady;
  const auto px = [&](double x) {
    return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin);
  };
  const auto py = [&](double y) {
    return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << "Kolmogorov distance vs n (" << report.mode << "), slope "
      << detail::fmt_double(report.fit.slope).substr(0, 7) << "</text>\n";
  // Axes.
  svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 16
      << "\" text-anchor=\"middle\" font-size=\"12\">log10 n</text>\n";
  svg << "<text x=\"18\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 " << height / 2
      << ")\">log10 delta</text>\n";
  // Fitted line in natural logs: log10 d = (intercept + slope ln n)/ln 10.
  const double lx0 = xmin + padx, lx1 = xmax - padx;
  const double ln10 = 2.302585092994046;
  const double ly0 = (report.fit.intercept + report.fit.slope * lx0 * ln10) / ln10;
  const double ly1 = (report.fit.intercept + report.fit.slope * lx1 * ln10) / ln10;
  svg << "<line x1=\"" << px(lx0) << "\" y1=\"" << py(ly0) << "\" x2=\"" << px(lx1) << "\" y2=\""
      << py(ly1) << "\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n";
  // Points.
  for (const auto& pt : report.points) {
    svg << "<circle cx=\"" << px(std::log10(static_cast<double>(pt.n))) << "\" cy=\""
        << py(std::log10(std::max(pt.delta, 1e-300))) << "\" r=\"4\" fill=\"crimson\"/>\n";
  }
  // Tick labels at the data points.
  for (const auto& pt : report.points) {
    svg << "<text x=\"" << px(std::log10(static_cast<double>(pt.n))) << "\" y=\""
        << height - margin + 16 << "\" text-anchor=\"middle\" font-size=\"10\">" << pt.n
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open output file \"" + path + "\"");
  out << content;
}

}  // namespace qrate
