#pragma once

// Command-line flags -> RunConfig.

#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "betachart/io/cli.hpp"

namespace betachart::tools {

struct Parser {
  std::unique_ptr<CLI::App> app;
  io::RunConfig config;
};

inline void add_data_flags(CLI::App* sub, io::RunConfig& c) {
  sub->add_option("-i,--input", c.input_path, "CSV file with a header row");
  sub->add_option("-y,--response", c.response_col, "response column")->capture_default_str();
  sub->add_option("--mean", c.mean_cols,
                  "mean submodel columns; 'a*b' is an interaction, intercept implied")
      ->delimiter(',');
  sub->add_option("--disp", c.disp_cols, "dispersion submodel columns (intercept implied)")
      ->delimiter(',');
  sub->add_flag("!--no-intercept", c.intercept, "drop the mean-submodel intercept");
  sub->add_option("--mean-link", c.mean_link, "logit, probit or cloglog")->capture_default_str();
  sub->add_option("--disp-link", c.disp_link, "logit, probit or cloglog")->capture_default_str();
  sub->add_flag("--boundary-adjust", c.boundary_adjust,
                "map y in [0, 1] to (y (n - 1) + 0.5) / n before fitting");
  sub->add_option_function<std::vector<double>>(
         "--rescale", [&c](const std::vector<double>& ab) { c.rescale = {{ab[0], ab[1]}}; },
         "response range A,B mapped to [0, 1]")
      ->expected(2)
      ->delimiter(',');
  sub->add_option("--json", c.json_path, "write the JSON report here");
}

inline Parser make_parser() {
  Parser p;
  p.app = std::make_unique<CLI::App>("Beta regression control charts", "betachart");
  p.app->require_subcommand(1);
  p.app->set_version_flag("--version", io::kVersion);
  auto& c = p.config;

  auto* fit = p.app->add_subcommand("fit", "fit a beta regression and test constant dispersion");
  add_data_flags(fit, c);
  fit->callback([&c] { c.subcommand = io::Subcommand::Fit; });

  auto* chart = p.app->add_subcommand("chart", "control limits and signals for observed data");
  add_data_flags(chart, c);
  chart->add_option("-c,--chart", c.charts, "bcc, rcc, brcc, brcc_c (default brcc)")
      ->delimiter(',');
  auto* alpha = chart->add_option_function<double>(
      "--alpha", [&c](double a) { c.alpha = a; }, "false-alarm probability");
  chart->add_option_function<double>("--arl0", [&c](double a) { c.arl0 = a; },
                                     "in-control ARL target (default 200)")
      ->excludes(alpha);
  chart->add_option_function<double>("--rcc-multiplier", [&c](double k) { c.rcc_multiplier = k; },
                                     "RCC limit width in residual SDs (default z_{1-alpha/2})");
  chart->add_option("--csv", c.csv_path, "write chart rows as CSV");
  chart->add_option("--svg", c.svg_path, "write an SVG plot");
  chart->add_option("--seed", c.seed, "recorded in the report metadata");
  chart->callback([&c] { c.subcommand = io::Subcommand::Chart; });

  auto* arl = p.app->add_subcommand("arl", "Monte Carlo ARL for a simulation scenario");
  arl->add_option("-s,--scenario", c.scenario, "scenario 1-6")
      ->capture_default_str()
      ->check(CLI::Range(1, 6));
  arl->add_option("-n,--n", c.n, "observations per sample")->capture_default_str();
  arl->add_option("-r,--reps", c.reps, "replications")->capture_default_str();
  arl->add_option("--seed", c.seed, "master seed (BETACHART_SEED overrides)")
      ->capture_default_str();
  arl->add_option("-w,--workers", c.workers, "worker threads (0: all cores)");
  arl->add_option("-c,--chart", c.charts, "charts (default brcc,brcc_c,rcc)")->delimiter(',');
  arl->add_option("--target", c.shift_target, "mean or dispersion")->capture_default_str();
  arl->add_option("-d,--delta", c.deltas, "shift values (default: full grid of the target)")
      ->delimiter(',');
  arl->add_option_function<double>("--arl0", [&c](double a) { c.arl0 = a; },
                                   "in-control ARL target (default 200)");
  arl->add_option_function<double>("--rcc-multiplier", [&c](double k) { c.rcc_multiplier = k; },
                                   "fixed RCC multiplier (disables RCC calibration)");
  arl->add_flag("!--no-calibrate", c.calibrate, "use alpha = 1/ARL0 without calibration");
  arl->add_flag("--true-parameters", c.true_parameters, "BRCC limits from the true parameters");
  arl->add_option("--csv", c.csv_path, "write the ARL table here instead of stdout");
  arl->add_option("--json", c.json_path, "write the ARL table as JSON");
  arl->callback([&c] { c.subcommand = io::Subcommand::Arl; });

  auto* list = p.app->add_subcommand("scenario-list", "print the simulation scenarios");
  list->add_option("-n,--n", c.n, "observations used for the averages")->capture_default_str();
  list->add_option("--seed", c.seed, "covariate seed")->capture_default_str();
  list->callback([&c] { c.subcommand = io::Subcommand::ScenarioList; });
  return p;
}

}  // namespace betachart::tools
