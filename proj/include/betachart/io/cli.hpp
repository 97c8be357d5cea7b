#pragma once

// Orchestration behind the command-line tool: read -> fit -> chart/arl ->
// emit. Exit codes: 0 success, 1 data or usage error, 2 convergence failure,
// 3 simulation failure.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "betachart/arl.hpp"
#include "betachart/charts.hpp"
#include "betachart/errors.hpp"
#include "betachart/fit.hpp"
#include "betachart/io/csv.hpp"
#include "betachart/io/report.hpp"
#include "betachart/io/svg.hpp"
#include "betachart/links.hpp"

namespace betachart::io {

enum class Subcommand { Fit, Chart, Arl, ScenarioList };

enum ExitCode : int { kExitOk = 0, kExitData = 1, kExitConvergence = 2, kExitSimulation = 3 };

struct RunConfig {
  Subcommand subcommand = Subcommand::Chart;

  // data
  std::string input_path;
  std::string response_col = "y";
  std::vector<std::string> mean_cols;  // intercept added unless intercept = false
  std::vector<std::string> disp_cols;
  bool intercept = true;
  std::string mean_link = "logit";
  std::string disp_link = "logit";
  bool boundary_adjust = false;
  std::optional<std::pair<double, double>> rescale;

  // limits: at most one of the two; default arl0 = 200
  std::optional<double> alpha;
  std::optional<double> arl0;
  std::vector<std::string> charts;  // default: brcc (chart), brcc,brcc_c,rcc (arl)
  std::optional<double> rcc_multiplier;

  // simulation
  std::uint64_t seed = 42;
  std::size_t reps = 2000;
  int scenario = 3;
  std::size_t n = 200;
  unsigned workers = 0;
  std::string shift_target = "mean";
  std::vector<double> deltas;  // empty: default grid of the target
  bool calibrate = true;
  bool true_parameters = false;

  // outputs; an empty path is not written (arl CSV then goes to stdout)
  std::string json_path;
  std::string csv_path;
  std::string svg_path;
};

/// BETACHART_SEED, when set, replaces the configured seed.
inline void apply_environment(RunConfig& cfg) {
  const char* env = std::getenv("BETACHART_SEED");
  if (env == nullptr || *env == '\0') return;
  const std::string s(env);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw UsageError("BETACHART_SEED must be a non-negative integer, got '" + s + "'");
  }
  cfg.seed = v;
}

inline AlphaPolicy alpha_policy(const RunConfig& cfg) {
  if (cfg.alpha && cfg.arl0) throw UsageError("give either --alpha or --arl0, not both");
  if (cfg.alpha) return AlphaPolicy::from_alpha(*cfg.alpha);
  return AlphaPolicy::from_arl0(cfg.arl0.value_or(200.0));
}

namespace detail {

inline std::vector<std::string> with_intercept(const std::vector<std::string>& cols,
                                               bool intercept) {
  std::vector<std::string> out;
  bool has = false;
  for (const auto& c : cols) has = has || c == kIntercept;
  if (intercept && !has) out.emplace_back(kIntercept);
  out.insert(out.end(), cols.begin(), cols.end());
  if (out.empty()) throw UsageError("model has no columns");
  return out;
}

inline ModelSpec model_spec(const RunConfig& cfg) {
  ModelSpec spec;
  spec.mean_cols = with_intercept(cfg.mean_cols, cfg.intercept);
  spec.disp_cols = with_intercept(cfg.disp_cols, true);
  spec.mean_link = parse_link(cfg.mean_link);
  spec.disp_link = parse_link(cfg.disp_link);
  return spec;
}

inline ModelSpec constant_dispersion(ModelSpec spec) {
  spec.disp_cols = {std::string(kIntercept)};
  return spec;
}

inline Dataset load(const RunConfig& cfg, const ModelSpec& spec) {
  if (cfg.input_path.empty()) throw UsageError("--input is required");
  IngestOptions ingest;
  ingest.boundary_adjust = cfg.boundary_adjust;
  ingest.rescale = cfg.rescale;
  return read_csv(cfg.input_path, cfg.response_col, spec.mean_cols, spec.disp_cols, ingest);
}

inline Dataset restrict_dispersion(const Dataset& data) {
  return Dataset{data.y, data.X, Eigen::MatrixXd::Ones(data.y.size(), 1)};
}

inline ReportMetadata metadata(const RunConfig& cfg) {
  ReportMetadata md;
  md.seed = cfg.seed;
  md.timestamp = utc_timestamp();
  md.input = cfg.input_path;
  return md;
}

inline std::string fixed(double v, int width, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%*.*f", width, precision, v);
  return buf;
}

inline std::string pvalue(double p) {
  char buf[32];
  if (p < 1e-16) return "   <1e-16";
  std::snprintf(buf, sizeof buf, "%9.4g", p);
  return buf;
}

inline void print_summary(std::ostream& out, const ModelSummary& m,
                          const std::optional<LrTestResult>& lr) {
  for (const char* sub : {"mean", "dispersion"}) {
    const bool mean = std::string(sub) == "mean";
    out << (mean ? "Mean" : "Dispersion") << " submodel ("
        << to_string(mean ? m.spec.mean_link : m.spec.disp_link) << " link)\n";
    out << "                  Estimate  Std. error     z stat    p-value\n";
    for (const auto& c : m.coefficients) {
      if (c.submodel != sub) continue;
      std::string name = c.name;
      if (name.size() < 14) name.resize(14, ' ');
      out << name << fixed(c.estimate, 12, 4) << fixed(c.std_error, 12, 4)
          << fixed(c.z_stat, 11, 3) << "  " << pvalue(c.p_value) << '\n';
    }
    out << '\n';
  }
  out << "n = " << m.n << ", log-likelihood = " << fixed(m.loglik, 0, 4) << '\n';
  if (lr) {
    out << "LR test of constant dispersion: stat = " << fixed(lr->stat, 0, 4)
        << ", df = " << lr->df << ", p-value = " << fixed(lr->p_value, 0, 4) << '\n';
  }
}

inline ModelSummary summarize(const RunConfig& cfg, const FittedBetaReg& fit,
                              const Dataset& data) {
  ModelSummary m;
  m.response = cfg.response_col;
  m.spec = fit.spec;
  m.coefficients = inference(fit, data);
  m.loglik = fit.loglik;
  m.iterations = fit.iterations;
  m.n = static_cast<std::size_t>(data.n());
  return m;
}

inline void emit(const RunConfig& cfg, const ChartReport& report) {
  if (!cfg.json_path.empty()) write_text(cfg.json_path, to_json(report).dump(2) + "\n");
  if (!cfg.csv_path.empty()) {
    std::ostringstream csv;
    write_chart_csv(csv, report.charts);
    write_text(cfg.csv_path, csv.str());
  }
  if (!cfg.svg_path.empty()) {
    const std::string title = cfg.input_path.empty() ? "Control charts" : cfg.input_path;
    write_text(cfg.svg_path, render_svg(report.charts, title));
  }
}

inline int run_fit(const RunConfig& cfg, std::ostream& out) {
  const ModelSpec spec = model_spec(cfg);
  const Dataset data = load(cfg, spec);
  const FittedBetaReg fit = fit_betareg(spec, data);
  ChartReport report;
  report.metadata = metadata(cfg);
  report.model = summarize(cfg, fit, data);
  if (spec.disp_cols.size() >= 2) {
    const FittedBetaReg reduced =
        fit_betareg(constant_dispersion(spec), restrict_dispersion(data),
                    FitOptions{.optimizer = {}, .compute_vcov = false});
    report.lr_test = lr_constant_dispersion(fit, reduced);
  }
  print_summary(out, *report.model, report.lr_test);
  emit(cfg, report);
  return kExitOk;
}

inline int run_chart(const RunConfig& cfg, std::ostream& out) {
  const double alpha = alpha_policy(cfg).alpha();
  const ModelSpec spec = model_spec(cfg);
  const Dataset data = load(cfg, spec);
  std::vector<ChartKind> kinds;
  for (const auto& name : cfg.charts.empty() ? std::vector<std::string>{"brcc"} : cfg.charts) {
    kinds.push_back(parse_chart_kind(name));
  }

  ChartReport report;
  report.metadata = metadata(cfg);
  std::optional<FittedBetaReg> full;
  std::optional<FittedBetaReg> reduced;
  auto full_fit = [&]() -> const FittedBetaReg& {
    if (!full) full = fit_betareg(spec, data);
    return *full;
  };
  auto reduced_fit = [&]() -> const FittedBetaReg& {
    if (!reduced) {
      reduced = fit_betareg(constant_dispersion(spec), restrict_dispersion(data));
    }
    return *reduced;
  };

  for (ChartKind k : kinds) {
    ChartResult r;
    switch (k) {
      case ChartKind::BCC:
        r = bcc_limits(data.y, alpha);
        break;
      case ChartKind::RCC:
        r = rcc_limits(fit_ols(data.X, data.y), data.y, alpha, cfg.rcc_multiplier);
        break;
      case ChartKind::BRCC:
        r = brcc_limits(full_fit(), data.y, alpha);
        break;
      case ChartKind::BRCC_C:
        r = brcc_limits(reduced_fit(), data.y, alpha);
        break;
    }
    report.charts.push_back(ChartSeries::from(r));
  }

  if (full) {
    report.model = summarize(cfg, *full, data);
  } else if (reduced) {
    report.model = summarize(cfg, *reduced, restrict_dispersion(data));
  }
  if (spec.disp_cols.size() >= 2 && (full || reduced)) {
    report.lr_test = lr_constant_dispersion(full_fit(), reduced_fit());
  }

  for (const auto& c : report.charts) {
    out << to_string(c.kind) << " (alpha = " << format_double(c.alpha) << "): ";
    if (c.signals.empty()) {
      out << "no signals\n";
    } else {
      out << "signals at";
      for (auto t : c.signals) out << ' ' << t;
      out << '\n';
    }
  }
  emit(cfg, report);
  return kExitOk;
}

inline int run_arl(const RunConfig& cfg, std::ostream& out) {
  if (cfg.alpha) throw UsageError("arl takes --arl0, not --alpha");
  const Scenario s = preset_scenario(cfg.scenario, cfg.n, cfg.seed);
  std::vector<ChartKind> kinds;
  for (const auto& name :
       cfg.charts.empty() ? std::vector<std::string>{"brcc", "brcc_c", "rcc"} : cfg.charts) {
    kinds.push_back(parse_chart_kind(name));
  }
  const ShiftTarget target = parse_shift_target(cfg.shift_target);
  const std::vector<double> grid = cfg.deltas.empty() ? default_grid(target) : cfg.deltas;

  ArlOptions opts;
  opts.reps = cfg.reps;
  opts.arl0_target = cfg.arl0.value_or(200.0);
  opts.workers = cfg.workers;
  opts.calibrate = cfg.calibrate;
  opts.true_parameters = cfg.true_parameters;
  opts.rcc_multiplier = cfg.rcc_multiplier;
  const auto curve = arl_curve(s, kinds, target, grid, opts);

  std::ostringstream csv;
  write_arl_csv(csv, curve);
  if (cfg.csv_path.empty()) {
    out << csv.str();
  } else {
    write_text(cfg.csv_path, csv.str());
  }
  if (!cfg.json_path.empty()) {
    write_text(cfg.json_path, to_json(curve, s, opts).dump(2) + "\n");
  }
  return kExitOk;
}

inline int run_scenario_list(const RunConfig& cfg, std::ostream& out) {
  out << "scenario  beta0  beta1  beta2  gamma0 gamma1 gamma2  mean(mu) mean(sigma)\n";
  for (int id = 1; id <= kScenarioCount; ++id) {
    const Scenario s = preset_scenario(id, cfg.n, cfg.seed);
    const auto ch = scenario_characteristics(s);
    out << fixed(id, 8, 0);
    for (double b : s.beta) out << fixed(b, 7, 2);
    out << ' ';
    for (double g : s.gamma) out << fixed(g, 7, 2);
    out << fixed(ch.mean, 10, 4) << fixed(ch.sigma, 12, 4) << '\n';
  }
  return kExitOk;
}

}  // namespace detail

/// Runs one subcommand, reporting errors on `err`.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    switch (cfg.subcommand) {
      case Subcommand::Fit:
        return detail::run_fit(cfg, out);
      case Subcommand::Chart:
        return detail::run_chart(cfg, out);
      case Subcommand::Arl:
        return detail::run_arl(cfg, out);
      case Subcommand::ScenarioList:
        return detail::run_scenario_list(cfg, out);
    }
    throw UsageError("unknown subcommand");
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const SimulationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSimulation;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace betachart::io
