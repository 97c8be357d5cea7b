#pragma once

// Control limits for the beta control chart (BCC), the normal-theory
// regression control chart (RCC) and the beta regression control chart with
// varying (BRCC) or constant (BRCC_C) dispersion.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "betachart/betadist.hpp"
#include "betachart/errors.hpp"
#include "betachart/fit.hpp"
#include "betachart/specfun.hpp"

namespace betachart {

enum class ChartKind { BCC, RCC, BRCC, BRCC_C };

inline std::string_view to_string(ChartKind k) {
  switch (k) {
    case ChartKind::BCC:
      return "BCC";
    case ChartKind::RCC:
      return "RCC";
    case ChartKind::BRCC:
      return "BRCC";
    case ChartKind::BRCC_C:
      return "BRCC_C";
  }
  return "unknown";
}

inline ChartKind parse_chart_kind(std::string_view name) {
  std::string lower(name);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "bcc") return ChartKind::BCC;
  if (lower == "rcc") return ChartKind::RCC;
  if (lower == "brcc") return ChartKind::BRCC;
  if (lower == "brcc_c" || lower == "brccc" || lower == "brcc-c") return ChartKind::BRCC_C;
  throw UsageError("unknown chart kind '" + std::string(name) +
                   "' (expected bcc, rcc, brcc or brcc_c)");
}

/// False-alarm probability, given directly or as 1 / ARL0.
class AlphaPolicy {
 public:
  static AlphaPolicy from_arl0(double arl0) {
    if (!std::isfinite(arl0) || !(arl0 > 1.0)) throw UsageError("ARL0 target must be > 1");
    return AlphaPolicy(1.0 / arl0, arl0);
  }
  static AlphaPolicy from_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie inside (0, 1)");
    return AlphaPolicy(alpha, std::nullopt);
  }

  double alpha() const noexcept { return alpha_; }
  std::optional<double> arl0_target() const noexcept { return arl0_; }

 private:
  AlphaPolicy(double alpha, std::optional<double> arl0) : alpha_(alpha), arl0_(arl0) {}
  double alpha_;
  std::optional<double> arl0_;
};

struct ChartRow {
  std::size_t t;  // 1-based observation index
  double y;
  double lcl;
  double ucl;
  bool signal;
};

struct ChartResult {
  ChartKind kind = ChartKind::BRCC;
  double alpha = 0.0;
  std::vector<ChartRow> rows;
};

/// Per-observation limits before they are paired with observations.
struct ControlLimits {
  std::vector<double> lcl;
  std::vector<double> ucl;
};

/// Out-of-control verdict. The in-control region is the open interval
/// (lcl, ucl); landing exactly on a limit signals.
constexpr bool outside_limits(double y, double lcl, double ucl) noexcept {
  return !(y > lcl && y < ucl);
}

inline ChartResult apply_limits(ChartKind kind, double alpha, const ControlLimits& limits,
                                const Eigen::VectorXd& y) {
  if (limits.lcl.size() != static_cast<std::size_t>(y.size()) ||
      limits.ucl.size() != limits.lcl.size()) {
    throw UsageError("limits and observations differ in length");
  }
  ChartResult out;
  out.kind = kind;
  out.alpha = alpha;
  out.rows.reserve(limits.lcl.size());
  for (std::size_t t = 0; t < limits.lcl.size(); ++t) {
    const double yt = y[static_cast<Eigen::Index>(t)];
    out.rows.push_back({t + 1, yt, limits.lcl[t], limits.ucl[t],
                        outside_limits(yt, limits.lcl[t], limits.ucl[t])});
  }
  return out;
}

/// Beta quantile limits Q(alpha/2) and Q(1 - alpha/2) at each (mu_t, sigma_t).
inline ControlLimits beta_quantile_limits(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                                          double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie inside (0, 1)");
  ControlLimits out;
  out.lcl.resize(static_cast<std::size_t>(mu.size()));
  out.ucl.resize(out.lcl.size());
  for (Eigen::Index t = 0; t < mu.size(); ++t) {
    const MuSigma p(mu[t], sigma[t]);
    out.lcl[static_cast<std::size_t>(t)] = quantile(0.5 * alpha, p);
    out.ucl[static_cast<std::size_t>(t)] = quantile(1.0 - 0.5 * alpha, p);
  }
  return out;
}

/// Limits of a fitted beta regression at new covariates (prospective use of
/// a frozen fit).
inline ControlLimits brcc_limits_at(const FittedBetaReg& fit, const Eigen::MatrixXd& X,
                                    const Eigen::MatrixXd& Z, double alpha) {
  if (X.cols() != fit.beta_hat.size() || Z.cols() != fit.gamma_hat.size() ||
      X.rows() != Z.rows()) {
    throw UsageError("covariate matrices do not match the fitted model");
  }
  const Eigen::VectorXd eta = X * fit.beta_hat;
  const Eigen::VectorXd zeta = Z * fit.gamma_hat;
  const Eigen::VectorXd mu = eta.unaryExpr([&](double e) { return link_inv(fit.spec.mean_link, e); });
  const Eigen::VectorXd sigma =
      zeta.unaryExpr([&](double e) { return link_inv(fit.spec.disp_link, e); });
  return beta_quantile_limits(mu, sigma, alpha);
}

/// BRCC limits on the fitting sample. A fit whose dispersion submodel is
/// intercept-only is reported as BRCC_C.
inline ChartResult brcc_limits(const FittedBetaReg& fit, const Eigen::VectorXd& y, double alpha) {
  if (!fit.converged) throw UsageError("BRCC limits need a converged fit");
  if (fit.mu_hat.size() != y.size()) throw UsageError("fit and observations differ in length");
  const ChartKind kind = fit.gamma_hat.size() > 1 ? ChartKind::BRCC : ChartKind::BRCC_C;
  return apply_limits(kind, alpha, beta_quantile_limits(fit.mu_hat, fit.sigma_hat, alpha), y);
}

/// Intercept-only beta fit used by the BCC.
inline FittedBetaReg fit_bcc(const Eigen::VectorXd& y) {
  Dataset data;
  data.y = y;
  data.X = Eigen::MatrixXd::Ones(y.size(), 1);
  data.Z = Eigen::MatrixXd::Ones(y.size(), 1);
  if (y.size() >= 2 && (y.array() == y[0]).all()) {
    throw DataError("BCC: all observations are equal; the beta fit is degenerate");
  }
  return fit_betareg(ModelSpec{}, data, FitOptions{.optimizer = {}, .compute_vcov = false});
}

/// Constant limits from a covariate-free beta fit.
inline ChartResult bcc_limits(const Eigen::VectorXd& y, double alpha) {
  const FittedBetaReg fit = fit_bcc(y);
  ChartResult out =
      apply_limits(ChartKind::BCC, alpha, beta_quantile_limits(fit.mu_hat, fit.sigma_hat, alpha), y);
  return out;
}

/// Normal-theory limits fitted_t -/+ multiplier * resid_sd. The default
/// multiplier is z_{1 - alpha/2}. Limits are not clamped to (0, 1).
inline ControlLimits rcc_limits_from(const FittedOLS& ols, double alpha,
                                     std::optional<double> multiplier = std::nullopt) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie inside (0, 1)");
  if (ols.degenerate()) {
    throw DataError("RCC: residual standard deviation is zero; the chart is degenerate");
  }
  const double z = multiplier.value_or(specfun::normal_quantile(1.0 - 0.5 * alpha));
  if (!(z > 0.0)) throw UsageError("RCC multiplier must be > 0");
  ControlLimits out;
  out.lcl.resize(static_cast<std::size_t>(ols.fitted.size()));
  out.ucl.resize(out.lcl.size());
  for (Eigen::Index t = 0; t < ols.fitted.size(); ++t) {
    out.lcl[static_cast<std::size_t>(t)] = ols.fitted[t] - z * ols.resid_sd;
    out.ucl[static_cast<std::size_t>(t)] = ols.fitted[t] + z * ols.resid_sd;
  }
  return out;
}

inline ChartResult rcc_limits(const FittedOLS& ols, const Eigen::VectorXd& y, double alpha,
                              std::optional<double> multiplier = std::nullopt) {
  return apply_limits(ChartKind::RCC, alpha, rcc_limits_from(ols, alpha, multiplier), y);
}

/// 1-based indices of signalling observations, ascending.
inline std::vector<std::size_t> detect_signals(const ChartResult& c) {
  std::vector<std::size_t> out;
  for (const auto& row : c.rows) {
    if (row.signal) out.push_back(row.t);
  }
  return out;
}

}  // namespace betachart
