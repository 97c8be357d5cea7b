#pragma once

// Monte Carlo average run length (ARL) of the BCC, RCC, BRCC and BRCC_C
// charts under the six simulation scenarios, for in-control data and for
// shifts of the mean or dispersion linear predictor.
//
// Each replication r draws a Phase I sample from stream (seed, r, 1), fits
// every requested chart on it, then scores a fresh Phase II sample drawn from
// stream (seed, r, 2) at the same covariates. The Phase II stream is the same
// for every shift, so curves use common random numbers across the grid. The
// ARL is the reciprocal of the pooled exceedance probability.
//
// Limits fitted on a finite Phase I sample do not attain the nominal
// false-alarm rate, so by default each chart's alpha is first calibrated on
// independent in-control replications (streams (seed, r, 3) and (seed, r, 4))
// to hit the ARL0 target; calibrate = false uses alpha = 1 / ARL0 as is.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "betachart/betadist.hpp"
#include "betachart/charts.hpp"
#include "betachart/errors.hpp"
#include "betachart/fit.hpp"
#include "betachart/links.hpp"
#include "betachart/rng.hpp"

namespace betachart {

struct Scenario {
  int id = 0;
  std::array<double, 3> beta{};
  std::array<double, 3> gamma{};
  std::size_t n = 200;
  std::uint64_t master_seed = 42;
  LinkKind mean_link = LinkKind::Logit;
  LinkKind disp_link = LinkKind::Logit;
};

inline constexpr int kScenarioCount = 6;

/// Simulation scenarios 1-6 (coefficients of the mean and dispersion
/// submodels with two U(0, 1) covariates each).
inline Scenario preset_scenario(int id, std::size_t n = 200, std::uint64_t seed = 42) {
  Scenario s;
  s.id = id;
  s.n = n;
  s.master_seed = seed;
  constexpr std::array<double, 3> kGammaLow{-1.15, -1.20, -1.20};
  switch (id) {
    case 1:
      s.beta = {-1.35, 1.00, 1.00};
      s.gamma = {-1.40, 1.00, -1.25};
      break;
    case 2:
      s.beta = {-1.35, 1.00, 1.00};
      s.gamma = {-1.00, -1.10, -1.00};
      break;
    case 3:
      s.beta = {-1.35, 1.00, 1.00};
      s.gamma = kGammaLow;
      break;
    case 4:
      s.beta = {-0.10, -1.35, -1.40};
      s.gamma = kGammaLow;
      break;
    case 5:
      s.beta = {1.50, 1.00, -1.00};
      s.gamma = kGammaLow;
      break;
    case 6:
      s.beta = {-1.00, -1.50, -1.50};
      s.gamma = kGammaLow;
      break;
    default:
      throw UsageError("scenario must be between 1 and 6");
  }
  if (n < 50) throw UsageError("scenario sample size must be >= 50");
  return s;
}

enum class ShiftTarget { Mean, Dispersion };

inline std::string_view to_string(ShiftTarget t) {
  return t == ShiftTarget::Mean ? "mean" : "dispersion";
}

inline ShiftTarget parse_shift_target(std::string_view name) {
  if (name == "mean") return ShiftTarget::Mean;
  if (name == "dispersion" || name == "disp") return ShiftTarget::Dispersion;
  throw UsageError("shift target must be 'mean' or 'dispersion'");
}

struct ShiftSpec {
  ShiftTarget target = ShiftTarget::Mean;
  double delta = 0.0;
};

inline void validate_shift(const ShiftSpec& s) {
  if (!std::isfinite(s.delta)) throw UsageError("shift delta must be finite");
  if (s.target == ShiftTarget::Dispersion && s.delta < 0.0) {
    throw UsageError("dispersion shifts must be >= 0");
  }
  if (s.target == ShiftTarget::Mean && std::fabs(s.delta) > 0.15 + 1e-12) {
    throw UsageError("mean shifts must lie in [-0.15, 0.15]");
  }
}

/// Shift grid with step 0.01: [-0.15, 0.15] for the mean, [0, 0.15] for the
/// dispersion.
inline std::vector<double> default_grid(ShiftTarget target) {
  std::vector<double> grid;
  const int lo = target == ShiftTarget::Mean ? -15 : 0;
  for (int i = lo; i <= 15; ++i) grid.push_back(i / 100.0);
  return grid;
}

struct Covariates {
  Eigen::MatrixXd X;  // n x 3, first column ones
  Eigen::MatrixXd Z;  // n x 3, first column ones
};

/// U(0, 1) covariates, drawn once per scenario seed and reused by every
/// replication.
inline Covariates gen_covariates(std::size_t n, std::uint64_t seed) {
  Stream rng = Stream::derive(seed, 0, 0);
  const auto rows = static_cast<Eigen::Index>(n);
  Covariates c{Eigen::MatrixXd::Ones(rows, 3), Eigen::MatrixXd::Ones(rows, 3)};
  for (Eigen::Index j = 1; j < 3; ++j) {
    for (Eigen::Index t = 0; t < rows; ++t) c.X(t, j) = rng.uniform();
  }
  for (Eigen::Index j = 1; j < 3; ++j) {
    for (Eigen::Index t = 0; t < rows; ++t) c.Z(t, j) = rng.uniform();
  }
  return c;
}

namespace detail {

inline Eigen::Map<const Eigen::Vector3d> as_vec(const std::array<double, 3>& a) {
  return Eigen::Map<const Eigen::Vector3d>(a.data());
}

struct TrueParameters {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
};

inline TrueParameters true_parameters(const Scenario& s, const Covariates& cov,
                                      const ShiftSpec& shift) {
  Eigen::VectorXd eta = cov.X * as_vec(s.beta);
  Eigen::VectorXd zeta = cov.Z * as_vec(s.gamma);
  if (shift.target == ShiftTarget::Mean) {
    eta.array() += shift.delta;
  } else {
    zeta.array() += shift.delta;
  }
  return {eta.unaryExpr([&](double e) { return link_inv(s.mean_link, e); }),
          zeta.unaryExpr([&](double e) { return link_inv(s.disp_link, e); })};
}

inline Eigen::VectorXd draw(Stream& rng, const TrueParameters& p) {
  Eigen::VectorXd y(p.mu.size());
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    y[t] = sample_one(rng, to_shape(MuSigma(p.mu[t], p.sigma[t])));
  }
  return y;
}

}  // namespace detail

struct ScenarioCharacteristics {
  double mean;
  double sigma;
};

/// Averages of mu_t and sigma_t over the scenario's covariates.
inline ScenarioCharacteristics scenario_characteristics(const Scenario& s) {
  const Covariates cov = gen_covariates(s.n, s.master_seed);
  const auto p = detail::true_parameters(s, cov, {});
  return {p.mu.mean(), p.sigma.mean()};
}

struct ArlOptions {
  std::size_t reps = 2000;
  double arl0_target = 200.0;
  unsigned workers = 0;  // 0: hardware concurrency
  // Average observed run lengths instead of inverting the pooled exceedance
  // rate. Runs cycle through the fixed covariates and are capped at
  // max_run_factor * arl0_target.
  bool run_length_mode = false;
  double max_run_factor = 100.0;
  // Use the true scenario parameters for BRCC limits instead of estimates.
  bool true_parameters = false;
  std::optional<double> rcc_multiplier;
  double max_failure_fraction = 0.05;
  // Calibrate each chart's false-alarm level so its in-control ARL matches
  // arl0_target (see calibrate_alpha). Off: limits use alpha = 1/arl0_target.
  bool calibrate = true;
  std::size_t calibration_reps = 0;  // 0: same as reps
};

struct ArlEstimate {
  ChartKind chart = ChartKind::BRCC;
  ShiftTarget target = ShiftTarget::Mean;
  double delta = 0.0;
  double arl = 0.0;
  double mc_std_error = 0.0;
  std::size_t replications = 0;  // successful replications
  std::size_t failures = 0;
  double outside_fraction = 0.0;
  bool capped = false;  // no exceedance observed; arl is a lower bound
  double alpha = 0.0;   // false-alarm level the limits were computed at
};

namespace detail {

// A chart fitted on one Phase I sample: limits at any alpha, and the
// two-sided tail probability of a new observation (the chart signals at level
// alpha exactly when that probability is <= alpha).
struct FittedChart {
  ChartKind kind = ChartKind::BRCC;
  // beta charts
  Eigen::VectorXd mu, sigma;
  // RCC
  Eigen::VectorXd fitted;
  double resid_sd = 0.0;

  ControlLimits limits(double alpha, std::optional<double> rcc_multiplier) const {
    if (kind == ChartKind::RCC) {
      FittedOLS ols;
      ols.fitted = fitted;
      ols.resid_sd = resid_sd;
      return rcc_limits_from(ols, alpha, rcc_multiplier);
    }
    return beta_quantile_limits(mu, sigma, alpha);
  }

  double tail_probability(Eigen::Index t, double y) const {
    if (kind == ChartKind::RCC) {
      return std::erfc(std::fabs(y - fitted[t]) / (resid_sd * std::sqrt(2.0)));
    }
    const ShapePair sp = to_shape(MuSigma(mu[t], sigma[t]));
    const auto tails = specfun::detail::inc_beta_tails(
        y, sp.theta1, sp.theta2, specfun::log_beta(sp.theta1, sp.theta2));
    return std::min(1.0, 2.0 * std::min(tails.lower, tails.upper));
  }
};

inline FittedChart fit_chart(ChartKind chart, const Covariates& cov, const Eigen::VectorXd& y,
                             const Scenario& s, const ArlOptions& opts,
                             const TrueParameters& truth) {
  const FitOptions fo{.optimizer = {}, .compute_vcov = false};
  FittedChart out;
  out.kind = chart;
  switch (chart) {
    case ChartKind::BCC: {
      const FittedBetaReg fit = fit_bcc(y);
      out.mu = fit.mu_hat;
      out.sigma = fit.sigma_hat;
      return out;
    }
    case ChartKind::RCC: {
      const FittedOLS ols = fit_ols(cov.X, y);
      if (ols.degenerate()) throw DataError("RCC: zero residual standard deviation");
      out.fitted = ols.fitted;
      out.resid_sd = ols.resid_sd;
      return out;
    }
    case ChartKind::BRCC: {
      if (opts.true_parameters) {
        out.mu = truth.mu;
        out.sigma = truth.sigma;
        return out;
      }
      ModelSpec spec{{"(Intercept)", "x1", "x2"}, {"(Intercept)", "z1", "z2"}, s.mean_link,
                     s.disp_link};
      const FittedBetaReg fit = fit_betareg(spec, Dataset{y, cov.X, cov.Z}, fo);
      out.mu = fit.mu_hat;
      out.sigma = fit.sigma_hat;
      return out;
    }
    case ChartKind::BRCC_C: {
      ModelSpec spec{{"(Intercept)", "x1", "x2"}, {"(Intercept)"}, s.mean_link, s.disp_link};
      const Dataset data{y, cov.X, Eigen::MatrixXd::Ones(y.size(), 1)};
      const FittedBetaReg fit = fit_betareg(spec, data, fo);
      out.mu = fit.mu_hat;
      out.sigma = fit.sigma_hat;
      return out;
    }
  }
  throw UsageError("unsupported chart kind");
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct RepOutcome {
  bool failed = false;
  std::vector<std::uint64_t> counts;  // exceedances, or run lengths, per shift
};

inline bool calibrated(ChartKind chart, const ArlOptions& opts) {
  if (!opts.calibrate) return false;
  if (chart == ChartKind::BRCC && opts.true_parameters) return false;
  if (chart == ChartKind::RCC && opts.rcc_multiplier) return false;
  return true;
}

// Stream phases: 0 covariates, 1/2 evaluation Phase I/II, 3/4 calibration
// Phase I/II.
inline constexpr std::uint64_t kPhaseOne = 1;
inline constexpr std::uint64_t kPhaseTwo = 2;
inline constexpr std::uint64_t kCalibPhaseOne = 3;
inline constexpr std::uint64_t kCalibPhaseTwo = 4;

}  // namespace detail

/// False-alarm level per chart that makes the pooled in-control exceedance
/// rate equal 1 / arl0_target on an independent set of calibration
/// replications. Charts that are not calibrated get the nominal level.
inline std::vector<double> calibrate_alpha(const Scenario& s, const std::vector<ChartKind>& charts,
                                           const ArlOptions& opts = {}) {
  const double nominal = AlphaPolicy::from_arl0(opts.arl0_target).alpha();
  if (std::none_of(charts.begin(), charts.end(),
                   [&](ChartKind c) { return detail::calibrated(c, opts); })) {
    return std::vector<double>(charts.size(), nominal);
  }
  const std::size_t reps = opts.calibration_reps ? opts.calibration_reps : opts.reps;
  const Covariates cov = gen_covariates(s.n, s.master_seed);
  const detail::TrueParameters truth = detail::true_parameters(s, cov, {});
  const std::size_t n_charts = charts.size();
  const std::size_t n = s.n;

  // tail probabilities per (rep, chart), NaN-filled when the fit failed
  std::vector<std::vector<double>> probs(reps * n_charts);
  detail::parallel_for(reps, opts.workers, [&](std::size_t r) {
    Stream phase1 = Stream::derive(s.master_seed, r, detail::kCalibPhaseOne);
    const Eigen::VectorXd y0 = detail::draw(phase1, truth);
    Stream phase2 = Stream::derive(s.master_seed, r, detail::kCalibPhaseTwo);
    const Eigen::VectorXd y1 = detail::draw(phase2, truth);
    for (std::size_t c = 0; c < n_charts; ++c) {
      if (!detail::calibrated(charts[c], opts)) continue;
      try {
        const detail::FittedChart fc = detail::fit_chart(charts[c], cov, y0, s, opts, truth);
        auto& out = probs[r * n_charts + c];
        out.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
          out[t] = fc.tail_probability(static_cast<Eigen::Index>(t), y1[static_cast<Eigen::Index>(t)]);
        }
      } catch (const ConvergenceError&) {
      } catch (const DataError&) {
      } catch (const DomainError&) {
      }
    }
  });

  std::vector<double> alphas(n_charts, nominal);
  for (std::size_t c = 0; c < n_charts; ++c) {
    if (!detail::calibrated(charts[c], opts)) continue;
    std::vector<double> pooled;
    std::size_t failures = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& v = probs[r * n_charts + c];
      if (v.empty()) ++failures;
      pooled.insert(pooled.end(), v.begin(), v.end());
    }
    if (static_cast<double>(failures) > opts.max_failure_fraction * static_cast<double>(reps)) {
      throw SimulationError(std::string(to_string(charts[c])) + ": " + std::to_string(failures) +
                            " calibration replications failed to fit");
    }
    // The chart signals iff tail probability <= alpha: put alpha between the
    // m-th and (m+1)-th smallest so exactly m of N points signal.
    const auto m = static_cast<std::size_t>(
        std::llround(static_cast<double>(pooled.size()) / opts.arl0_target));
    if (m == 0 || m >= pooled.size()) {
      throw SimulationError("calibration sample too small for the ARL0 target");
    }
    std::nth_element(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(m),
                     pooled.end());
    const double upper = pooled[m];
    const double lower = *std::max_element(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(m));
    alphas[c] = std::clamp(0.5 * (lower + upper), 1e-300, 0.5);
  }
  return alphas;
}

/// One ArlEstimate per (chart, delta), charts outermost.
inline std::vector<ArlEstimate> arl_curve(const Scenario& s, const std::vector<ChartKind>& charts,
                                          ShiftTarget target, const std::vector<double>& grid,
                                          const ArlOptions& opts = {}) {
  if (opts.reps < 100) throw UsageError("need at least 100 replications");
  if (charts.empty() || grid.empty()) throw UsageError("need at least one chart and one shift");
  if (s.n < 50) throw UsageError("scenario sample size must be >= 50");
  for (double d : grid) validate_shift({target, d});
  const std::vector<double> alphas = calibrate_alpha(s, charts, opts);

  const Covariates cov = gen_covariates(s.n, s.master_seed);
  const detail::TrueParameters in_control = detail::true_parameters(s, cov, {target, 0.0});
  std::vector<detail::TrueParameters> shifted;
  shifted.reserve(grid.size());
  for (double d : grid) shifted.push_back(detail::true_parameters(s, cov, {target, d}));

  const std::size_t n_charts = charts.size();
  std::vector<detail::RepOutcome> outcomes(opts.reps * n_charts);
  const auto max_run =
      static_cast<std::uint64_t>(std::ceil(opts.max_run_factor * opts.arl0_target));

  detail::parallel_for(opts.reps, opts.workers, [&](std::size_t r) {
    Stream phase1 = Stream::derive(s.master_seed, r, detail::kPhaseOne);
    const Eigen::VectorXd y0 = detail::draw(phase1, in_control);
    for (std::size_t c = 0; c < n_charts; ++c) {
      auto& out = outcomes[r * n_charts + c];
      ControlLimits limits;
      try {
        limits = detail::fit_chart(charts[c], cov, y0, s, opts, in_control)
                     .limits(alphas[c], opts.rcc_multiplier);
      } catch (const ConvergenceError&) {
        out.failed = true;
      } catch (const DataError&) {
        out.failed = true;
      } catch (const DomainError&) {
        out.failed = true;
      }
      if (out.failed) continue;

      out.counts.assign(grid.size(), 0);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        Stream phase2 = Stream::derive(s.master_seed, r, detail::kPhaseTwo);
        const auto& p = shifted[g];
        if (!opts.run_length_mode) {
          std::uint64_t outside = 0;
          for (Eigen::Index t = 0; t < p.mu.size(); ++t) {
            const double y = sample_one(phase2, to_shape(MuSigma(p.mu[t], p.sigma[t])));
            const auto ti = static_cast<std::size_t>(t);
            outside += outside_limits(y, limits.lcl[ti], limits.ucl[ti]) ? 1 : 0;
          }
          out.counts[g] = outside;
        } else {
          std::uint64_t run = 0;
          for (;;) {
            const auto t = static_cast<Eigen::Index>(run % static_cast<std::uint64_t>(p.mu.size()));
            const double y = sample_one(phase2, to_shape(MuSigma(p.mu[t], p.sigma[t])));
            ++run;
            const auto ti = static_cast<std::size_t>(t);
            if (outside_limits(y, limits.lcl[ti], limits.ucl[ti]) || run >= max_run) break;
          }
          out.counts[g] = run;
        }
      }
    }
  });

  std::vector<ArlEstimate> result;
  result.reserve(n_charts * grid.size());
  for (std::size_t c = 0; c < n_charts; ++c) {
    std::size_t failures = 0;
    for (std::size_t r = 0; r < opts.reps; ++r) failures += outcomes[r * n_charts + c].failed;
    if (static_cast<double>(failures) > opts.max_failure_fraction * static_cast<double>(opts.reps)) {
      throw SimulationError(std::string(to_string(charts[c])) + ": " + std::to_string(failures) +
                            " of " + std::to_string(opts.reps) + " replications failed to fit");
    }
    const std::size_t ok = opts.reps - failures;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      ArlEstimate est;
      est.chart = charts[c];
      est.target = target;
      est.delta = grid[g];
      est.replications = ok;
      est.failures = failures;
      est.alpha = alphas[c];
      if (!opts.run_length_mode) {
        std::uint64_t outside = 0;
        for (std::size_t r = 0; r < opts.reps; ++r) {
          const auto& o = outcomes[r * n_charts + c];
          if (!o.failed) outside += o.counts[g];
        }
        const double points = static_cast<double>(ok) * static_cast<double>(s.n);
        est.outside_fraction = static_cast<double>(outside) / points;
        if (outside == 0) {
          est.capped = true;
          est.arl = points;
          est.mc_std_error = points;
        } else {
          const double p = est.outside_fraction;
          est.arl = 1.0 / p;
          est.mc_std_error = std::sqrt(p * (1.0 - p) / points) / (p * p);
        }
      } else {
        double sum = 0.0;
        double sum_sq = 0.0;
        bool capped = false;
        for (std::size_t r = 0; r < opts.reps; ++r) {
          const auto& o = outcomes[r * n_charts + c];
          if (o.failed) continue;
          const auto rl = static_cast<double>(o.counts[g]);
          sum += rl;
          sum_sq += rl * rl;
          capped = capped || o.counts[g] >= max_run;
        }
        const double m = sum / static_cast<double>(ok);
        const double var = std::max(0.0, sum_sq / static_cast<double>(ok) - m * m);
        est.arl = m;
        est.outside_fraction = 1.0 / m;
        est.mc_std_error = std::sqrt(var / static_cast<double>(ok));
        est.capped = capped;
      }
      result.push_back(est);
    }
  }
  return result;
}

inline ArlEstimate simulate_arl(const Scenario& s, ChartKind chart, const ShiftSpec& shift,
                                const ArlOptions& opts = {}) {
  validate_shift(shift);
  return arl_curve(s, {chart}, shift.target, {shift.delta}, opts).front();
}

}  // namespace betachart
