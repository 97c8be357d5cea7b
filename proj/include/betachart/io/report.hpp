#pragma once

// Report types written by the command-line tool: a JSON chart report, chart
// rows and ARL curves as CSV. Doubles are written in shortest round-trip
// form, so re-reading a report reproduces every number bit for bit.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "betachart/arl.hpp"
#include "betachart/charts.hpp"
#include "betachart/errors.hpp"
#include "betachart/fit.hpp"
#include "betachart/links.hpp"

namespace betachart::io {

inline constexpr const char* kVersion = "0.1.0";

struct ModelSummary {
  std::string response;
  ModelSpec spec;
  std::vector<CoefficientRow> coefficients;
  double loglik = 0.0;
  int iterations = 0;
  std::size_t n = 0;
};

struct ChartSeries {
  ChartKind kind = ChartKind::BRCC;
  double alpha = 0.0;
  std::vector<ChartRow> rows;
  std::vector<std::size_t> signals;  // 1-based

  static ChartSeries from(const ChartResult& r) {
    return {r.kind, r.alpha, r.rows, detect_signals(r)};
  }
};

struct ReportMetadata {
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string timestamp;  // ISO 8601, UTC
  std::string input;
};

struct ChartReport {
  std::optional<ModelSummary> model;
  std::optional<LrTestResult> lr_test;
  std::vector<ChartSeries> charts;
  ReportMetadata metadata;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

using nlohmann::json;

// JSON has no non-finite numbers; those travel as strings.
inline json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

inline double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw DataError("report: expected a number, got " + j.dump());
}

}  // namespace detail

inline nlohmann::json to_json(const ChartReport& r) {
  using detail::json;
  using detail::number;
  json out = json::object();
  if (r.model) {
    const auto& m = *r.model;
    json coefs = json::array();
    for (const auto& c : m.coefficients) {
      coefs.push_back({{"submodel", c.submodel},
                       {"name", c.name},
                       {"estimate", number(c.estimate)},
                       {"std_error", number(c.std_error)},
                       {"z_stat", number(c.z_stat)},
                       {"p_value", number(c.p_value)}});
    }
    out["model"] = {{"response", m.response},
                    {"mean_cols", m.spec.mean_cols},
                    {"disp_cols", m.spec.disp_cols},
                    {"mean_link", std::string(to_string(m.spec.mean_link))},
                    {"disp_link", std::string(to_string(m.spec.disp_link))},
                    {"coefficients", coefs},
                    {"loglik", number(m.loglik)},
                    {"iterations", m.iterations},
                    {"n", m.n}};
  }
  if (r.lr_test) {
    out["lr_test"] = {{"stat", number(r.lr_test->stat)},
                      {"df", r.lr_test->df},
                      {"p_value", number(r.lr_test->p_value)}};
  }
  json charts = json::array();
  for (const auto& c : r.charts) {
    json rows = json::array();
    for (const auto& row : c.rows) {
      rows.push_back({{"t", row.t},
                      {"y", number(row.y)},
                      {"lcl", number(row.lcl)},
                      {"ucl", number(row.ucl)},
                      {"signal", row.signal}});
    }
    charts.push_back({{"chart", std::string(to_string(c.kind))},
                      {"alpha", number(c.alpha)},
                      {"signals", c.signals},
                      {"rows", rows}});
  }
  out["charts"] = charts;
  out["metadata"] = {{"seed", r.metadata.seed},
                     {"version", r.metadata.version},
                     {"timestamp", r.metadata.timestamp},
                     {"input", r.metadata.input}};
  return out;
}

inline ChartReport report_from_json(const nlohmann::json& j) {
  using detail::number_from;
  ChartReport r;
  try {
    if (j.contains("model")) {
      const auto& jm = j.at("model");
      ModelSummary m;
      m.response = jm.at("response").get<std::string>();
      m.spec.mean_cols = jm.at("mean_cols").get<std::vector<std::string>>();
      m.spec.disp_cols = jm.at("disp_cols").get<std::vector<std::string>>();
      m.spec.mean_link = parse_link(jm.at("mean_link").get<std::string>());
      m.spec.disp_link = parse_link(jm.at("disp_link").get<std::string>());
      for (const auto& jc : jm.at("coefficients")) {
        CoefficientRow c;
        c.submodel = jc.at("submodel").get<std::string>();
        c.name = jc.at("name").get<std::string>();
        c.estimate = number_from(jc.at("estimate"));
        c.std_error = number_from(jc.at("std_error"));
        c.z_stat = number_from(jc.at("z_stat"));
        c.p_value = number_from(jc.at("p_value"));
        m.coefficients.push_back(std::move(c));
      }
      m.loglik = number_from(jm.at("loglik"));
      m.iterations = jm.at("iterations").get<int>();
      m.n = jm.at("n").get<std::size_t>();
      r.model = std::move(m);
    }
    if (j.contains("lr_test")) {
      const auto& jl = j.at("lr_test");
      r.lr_test = LrTestResult{number_from(jl.at("stat")), jl.at("df").get<int>(),
                               number_from(jl.at("p_value"))};
    }
    for (const auto& jc : j.at("charts")) {
      ChartSeries c;
      c.kind = parse_chart_kind(jc.at("chart").get<std::string>());
      c.alpha = number_from(jc.at("alpha"));
      c.signals = jc.at("signals").get<std::vector<std::size_t>>();
      for (const auto& jr : jc.at("rows")) {
        c.rows.push_back({jr.at("t").get<std::size_t>(), number_from(jr.at("y")),
                          number_from(jr.at("lcl")), number_from(jr.at("ucl")),
                          jr.at("signal").get<bool>()});
      }
      r.charts.push_back(std::move(c));
    }
    const auto& md = j.at("metadata");
    r.metadata.seed = md.at("seed").get<std::uint64_t>();
    r.metadata.version = md.at("version").get<std::string>();
    r.metadata.timestamp = md.at("timestamp").get<std::string>();
    r.metadata.input = md.at("input").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return r;
}

inline nlohmann::json to_json(const std::vector<ArlEstimate>& curve, const Scenario& s,
                              const ArlOptions& opts) {
  using detail::json;
  using detail::number;
  json rows = json::array();
  for (const auto& e : curve) {
    rows.push_back({{"chart", std::string(to_string(e.chart))},
                    {"target", std::string(to_string(e.target))},
                    {"delta", number(e.delta)},
                    {"arl", number(e.arl)},
                    {"mc_se", number(e.mc_std_error)},
                    {"reps", e.replications},
                    {"failures", e.failures},
                    {"outside_fraction", number(e.outside_fraction)},
                    {"alpha", number(e.alpha)},
                    {"capped", e.capped}});
  }
  return {{"scenario", s.id},
          {"n", s.n},
          {"seed", s.master_seed},
          {"reps", opts.reps},
          {"arl0_target", number(opts.arl0_target)},
          {"calibrated", opts.calibrate},
          {"estimates", rows}};
}

/// chart,t,y,lcl,ucl,signal
inline void write_chart_csv(std::ostream& out, const std::vector<ChartSeries>& charts) {
  out << "chart,t,y,lcl,ucl,signal\n";
  for (const auto& c : charts) {
    for (const auto& row : c.rows) {
      out << to_string(c.kind) << ',' << row.t << ',' << format_double(row.y) << ','
          << format_double(row.lcl) << ',' << format_double(row.ucl) << ','
          << (row.signal ? 1 : 0) << '\n';
    }
  }
}

/// chart,delta,arl,mc_se,reps
inline void write_arl_csv(std::ostream& out, const std::vector<ArlEstimate>& curve) {
  out << "chart,delta,arl,mc_se,reps\n";
  for (const auto& e : curve) {
    out << to_string(e.chart) << ',' << format_double(e.delta) << ',' << format_double(e.arl)
        << ',' << format_double(e.mc_std_error) << ',' << e.replications << '\n';
  }
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_output(path);
  out << text;
  out.flush();
  if (!out) throw DataError("error writing '" + path + "'");
}

}  // namespace betachart::io
