#pragma once

// Maximum likelihood for the beta regression model with regression
// structures on both the mean and the dispersion,
//   g(mu_t) = x_t' beta,   h(sigma_t) = z_t' gamma,
// plus Wald inference, the likelihood-ratio test for constant dispersion and
// the least-squares fit used by the normal-theory regression chart.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "betachart/errors.hpp"
#include "betachart/links.hpp"
#include "betachart/optim.hpp"
#include "betachart/specfun.hpp"

namespace betachart {

inline constexpr std::string_view kIntercept = "(Intercept)";

/// Which columns enter each submodel and through which links.
struct ModelSpec {
  std::vector<std::string> mean_cols{std::string(kIntercept)};
  std::vector<std::string> disp_cols{std::string(kIntercept)};
  LinkKind mean_link = LinkKind::Logit;
  LinkKind disp_link = LinkKind::Logit;
};

/// Response in (0, 1) with the mean (X) and dispersion (Z) design matrices.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;

  Eigen::Index n() const noexcept { return y.size(); }
  Eigen::Index k() const noexcept { return X.cols(); }
  Eigen::Index s() const noexcept { return Z.cols(); }
};

/// Observations closer than this to 0 or 1 are refused by the fit.
inline constexpr double kBoundaryTolerance = 1e-10;

inline void validate_dataset(const Dataset& data) {
  const auto n = data.n();
  if (data.X.rows() != n || data.Z.rows() != n) {
    throw DataError("design matrices must have one row per observation");
  }
  if (data.k() < 1 || data.s() < 1) {
    throw DataError("both submodels need at least one column");
  }
  if (n <= data.k() + data.s()) {
    throw DataError("need more observations (" + std::to_string(n) + ") than parameters (" +
                    std::to_string(data.k() + data.s()) + ")");
  }
  for (Eigen::Index t = 0; t < n; ++t) {
    const double y = data.y[t];
    if (!(y > 0.0 && y < 1.0)) {
      throw DataError("observation " + std::to_string(t + 1) +
                      " is outside (0, 1); rescale or apply the boundary adjustment");
    }
    if (y < kBoundaryTolerance || 1.0 - y < kBoundaryTolerance) {
      throw DataError("observation " + std::to_string(t + 1) +
                      " is numerically on the boundary; apply the boundary adjustment");
    }
  }
  if (!data.X.allFinite() || !data.Z.allFinite()) {
    throw DataError("design matrices contain non-finite entries");
  }
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(data.X).rank() < data.k()) {
    throw DataError("mean design matrix is rank deficient");
  }
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(data.Z).rank() < data.s()) {
    throw DataError("dispersion design matrix is rank deficient");
  }
}

/// Log-likelihood and analytic score for a fixed dataset. Parameters are
/// stacked as theta = (beta, gamma).
class BetaRegLikelihood {
 public:
  BetaRegLikelihood(const Dataset& data, LinkKind mean_link, LinkKind disp_link)
      : data_(data), mean_link_(mean_link), disp_link_(disp_link) {
    log_y_ = data.y.array().log();
    log_1my_ = (-data.y.array()).log1p();
  }

  Eigen::Index size() const noexcept { return data_.k() + data_.s(); }

  double value(const Eigen::VectorXd& theta) const { return evaluate(theta, nullptr); }

  double value_and_score(const Eigen::VectorXd& theta, Eigen::VectorXd& score) const {
    return evaluate(theta, &score);
  }

  Eigen::VectorXd score(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd g;
    evaluate(theta, &g);
    return g;
  }

  /// Negative Jacobian of the analytic score by central differences with
  /// step 1e-5 * max(1, |theta_j|), symmetrized.
  Eigen::MatrixXd observed_information(const Eigen::VectorXd& theta) const {
    const Eigen::Index p = size();
    Eigen::MatrixXd H(p, p);
    Eigen::VectorXd tp = theta, tm = theta;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double h = 1e-5 * std::max(1.0, std::fabs(theta[j]));
      tp[j] = theta[j] + h;
      tm[j] = theta[j] - h;
      H.col(j) = (score(tp) - score(tm)) / (tp[j] - tm[j]);
      tp[j] = theta[j];
      tm[j] = theta[j];
    }
    return -0.5 * (H + H.transpose());
  }

 private:
  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* score) const {
    const Eigen::Index k = data_.k();
    const Eigen::Index s = data_.s();
    const Eigen::VectorXd eta = data_.X * theta.head(k);
    const Eigen::VectorXd zeta = data_.Z * theta.tail(s);
    if (score) score->setZero(k + s);

    double total = 0.0;
    for (Eigen::Index t = 0; t < data_.n(); ++t) {
      if (!std::isfinite(eta[t]) || !std::isfinite(zeta[t])) {
        return -std::numeric_limits<double>::infinity();
      }
      const double mu = link_inv(mean_link_, eta[t]);
      const double sigma = link_inv(disp_link_, zeta[t]);
      const double phi = (1.0 - sigma * sigma) / (sigma * sigma);
      const double a = mu * phi;
      const double b = (1.0 - mu) * phi;
      if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(phi)) {
        return -std::numeric_limits<double>::infinity();
      }
      total += specfun::log_gamma(phi) - specfun::log_gamma(a) - specfun::log_gamma(b) +
               (a - 1.0) * log_y_[t] + (b - 1.0) * log_1my_[t];

      if (score) {
        const double psi_a = specfun::digamma(a);
        const double psi_b = specfun::digamma(b);
        const double d_mu = phi * ((log_y_[t] - log_1my_[t]) - (psi_a - psi_b));
        const double d_phi = specfun::digamma(phi) - mu * psi_a - (1.0 - mu) * psi_b +
                             mu * log_y_[t] + (1.0 - mu) * log_1my_[t];
        const double d_sigma = d_phi * (-2.0 / (sigma * sigma * sigma));
        const double w_mean = d_mu * link_inv_deriv(mean_link_, eta[t]);
        const double w_disp = d_sigma * link_inv_deriv(disp_link_, zeta[t]);
        score->head(k) += w_mean * data_.X.row(t).transpose();
        score->tail(s) += w_disp * data_.Z.row(t).transpose();
      }
    }
    if (!std::isfinite(total)) return -std::numeric_limits<double>::infinity();
    return total;
  }

  const Dataset& data_;
  LinkKind mean_link_;
  LinkKind disp_link_;
  Eigen::ArrayXd log_y_;
  Eigen::ArrayXd log_1my_;
};

namespace detail {

inline void check_spec_matches(const ModelSpec& spec, const Dataset& data) {
  if (static_cast<Eigen::Index>(spec.mean_cols.size()) != data.k() ||
      static_cast<Eigen::Index>(spec.disp_cols.size()) != data.s()) {
    throw UsageError("model columns do not match the dataset's design matrices");
  }
}

inline Eigen::VectorXd stack(const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma,
                             const Dataset& data) {
  if (beta.size() != data.k() || gamma.size() != data.s()) {
    throw UsageError("coefficient vectors have " + std::to_string(beta.size()) + " + " +
                     std::to_string(gamma.size()) + " entries; the design has " +
                     std::to_string(data.k()) + " + " + std::to_string(data.s()) + " columns");
  }
  Eigen::VectorXd theta(beta.size() + gamma.size());
  theta << beta, gamma;
  return theta;
}

}  // namespace detail

inline double loglik(const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma,
                     const ModelSpec& spec, const Dataset& data) {
  detail::check_spec_matches(spec, data);
  return BetaRegLikelihood(data, spec.mean_link, spec.disp_link)
      .value(detail::stack(beta, gamma, data));
}

inline Eigen::VectorXd score(const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma,
                             const ModelSpec& spec, const Dataset& data) {
  detail::check_spec_matches(spec, data);
  return BetaRegLikelihood(data, spec.mean_link, spec.disp_link)
      .score(detail::stack(beta, gamma, data));
}

struct FittedOLS {
  Eigen::VectorXd coef;
  double resid_sd = 0.0;  // sqrt(RSS / (n - k))
  Eigen::VectorXd fitted;

  /// Residual scale is zero to working precision.
  bool degenerate() const noexcept {
    const double scale = fitted.size() ? std::max(1.0, fitted.cwiseAbs().maxCoeff()) : 1.0;
    return !(resid_sd > 1e-12 * scale);
  }
};

inline FittedOLS fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw DataError("fit_ols: X and y have different lengths");
  if (y.size() <= X.cols()) throw DataError("fit_ols: need more observations than columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) throw DataError("fit_ols: design matrix is rank deficient");
  FittedOLS out;
  out.coef = qr.solve(y);
  out.fitted = X * out.coef;
  const double rss = (y - out.fitted).squaredNorm();
  out.resid_sd = std::sqrt(rss / static_cast<double>(y.size() - X.cols()));
  return out;
}

inline FittedOLS fit_ols(const Dataset& data) { return fit_ols(data.X, data.y); }

/// Starting point: OLS of g(y*) on X with y* pulled away from the
/// boundaries; dispersion intercept from the method-of-moments precision
/// implied by the OLS residual variance, other gamma entries zero.
inline Eigen::VectorXd start_values(const ModelSpec& spec, const Dataset& data) {
  const auto n = static_cast<double>(data.n());
  Eigen::VectorXd gy(data.n());
  for (Eigen::Index t = 0; t < data.n(); ++t) {
    const double shrunk = (data.y[t] * (n - 1.0) + 0.5) / n;
    gy[t] = link_eval(spec.mean_link, shrunk);
  }
  const FittedOLS ols = fit_ols(data.X, gy);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(data.k() + data.s());
  theta.head(data.k()) = ols.coef;

  const double df = n - static_cast<double>(data.k());
  const double resid_var = (gy - ols.fitted).squaredNorm() / df;
  double phi_sum = 0.0;
  for (Eigen::Index t = 0; t < data.n(); ++t) {
    const double mu = link_inv(spec.mean_link, ols.fitted[t]);
    const double dmu = link_inv_deriv(spec.mean_link, ols.fitted[t]);
    const double var_y = resid_var * dmu * dmu;
    phi_sum += mu * (1.0 - mu) / std::max(var_y, 1e-300) - 1.0;
  }
  const double phi = std::clamp(phi_sum / n, 1e-2, 1e8);
  const double sigma = std::sqrt(1.0 / (1.0 + phi));

  Eigen::Index icol = -1;
  for (Eigen::Index j = 0; j < data.s(); ++j) {
    if ((data.Z.col(j).array() == 1.0).all()) {
      icol = j;
      break;
    }
  }
  if (icol >= 0) theta[data.k() + icol] = link_eval(spec.disp_link, sigma);
  return theta;
}

struct FitOptions {
  BfgsOptions optimizer{};
  bool compute_vcov = true;
};

struct FittedBetaReg {
  ModelSpec spec;
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd gamma_hat;
  double loglik = 0.0;
  double start_loglik = 0.0;
  Eigen::MatrixXd vcov;  // empty when not requested
  Eigen::VectorXd mu_hat;
  Eigen::VectorXd sigma_hat;
  bool converged = false;
  int iterations = 0;

  Eigen::VectorXd theta() const {
    Eigen::VectorXd out(beta_hat.size() + gamma_hat.size());
    out << beta_hat, gamma_hat;
    return out;
  }
};

/// Covariance as the inverse observed information at theta.
inline Eigen::MatrixXd observed_vcov(const ModelSpec& spec, const Dataset& data,
                                     const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd info =
      BetaRegLikelihood(data, spec.mean_link, spec.disp_link).observed_information(theta);
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    throw ConvergenceError("observed information is not positive definite at the estimate",
                           std::vector<double>(theta.data(), theta.data() + theta.size()));
  }
  Eigen::MatrixXd vcov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  return 0.5 * (vcov + vcov.transpose());
}

/// Newton steps on the observed information, used when the quasi-Newton line
/// search stalls near the optimum because objective differences fall below
/// rounding noise. A step is kept only if it lowers max |score| without a
/// meaningful drop in the log-likelihood.
inline void polish_newton(const BetaRegLikelihood& lik, BfgsResult& res, double grad_tol) {
  constexpr int kMaxSteps = 20;
  double gmax = res.gradient.lpNorm<Eigen::Infinity>();
  Eigen::VectorXd g(res.x.size());
  for (int i = 0; i < kMaxSteps && gmax >= grad_tol; ++i) {
    Eigen::LLT<Eigen::MatrixXd> llt(lik.observed_information(res.x));
    if (llt.info() != Eigen::Success) return;
    const Eigen::VectorXd cand = res.x + llt.solve(res.gradient);
    const double val = lik.value_and_score(cand, g);
    const double gm = g.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(val) || !g.allFinite() || !(gm < gmax) ||
        val < res.value - 1e-10 * std::max(1.0, std::fabs(res.value))) {
      return;
    }
    res.x = cand;
    res.gradient = g;
    res.value = val;
    ++res.iterations;
    gmax = gm;
  }
  res.converged = gmax < grad_tol;
}

inline FittedBetaReg fit_betareg(const ModelSpec& spec, const Dataset& data,
                                 const FitOptions& opts = {}) {
  detail::check_spec_matches(spec, data);
  validate_dataset(data);

  const BetaRegLikelihood lik(data, spec.mean_link, spec.disp_link);
  const Eigen::VectorXd theta0 = start_values(spec, data);
  auto objective = [&lik](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
    return lik.value_and_score(th, g);
  };
  BfgsResult res = maximize_bfgs(objective, theta0, opts.optimizer);
  if (!res.converged && res.value > -std::numeric_limits<double>::infinity()) {
    polish_newton(lik, res, opts.optimizer.grad_tol);
  }
  if (!res.converged) {
    throw ConvergenceError(
        "beta regression fit did not converge (max |score| = " +
            std::to_string(res.gradient.size() ? res.gradient.lpNorm<Eigen::Infinity>() : 0.0) +
            ")",
        std::vector<double>(res.x.data(), res.x.data() + res.x.size()), res.iterations);
  }

  FittedBetaReg fit;
  fit.spec = spec;
  fit.beta_hat = res.x.head(data.k());
  fit.gamma_hat = res.x.tail(data.s());
  fit.loglik = res.value;
  fit.start_loglik = res.start_value;
  fit.converged = true;
  fit.iterations = res.iterations;
  const Eigen::VectorXd eta = data.X * fit.beta_hat;
  const Eigen::VectorXd zeta = data.Z * fit.gamma_hat;
  fit.mu_hat = eta.unaryExpr([&](double e) { return link_inv(spec.mean_link, e); });
  fit.sigma_hat = zeta.unaryExpr([&](double e) { return link_inv(spec.disp_link, e); });
  if (opts.compute_vcov) fit.vcov = observed_vcov(spec, data, res.x);
  return fit;
}

struct CoefficientRow {
  std::string submodel;  // "mean" or "dispersion"
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double z_stat = 0.0;
  double p_value = 1.0;
};

/// Wald table: standard errors from the inverse observed information, z =
/// estimate / se and two-sided normal p-values.
inline std::vector<CoefficientRow> inference(const FittedBetaReg& fit, const Dataset& data) {
  const Eigen::VectorXd theta = fit.theta();
  const Eigen::MatrixXd vcov =
      fit.vcov.size() ? fit.vcov : observed_vcov(fit.spec, data, theta);
  std::vector<CoefficientRow> rows;
  rows.reserve(static_cast<std::size_t>(theta.size()));
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    CoefficientRow row;
    const bool mean = j < fit.beta_hat.size();
    row.submodel = mean ? "mean" : "dispersion";
    const auto idx = static_cast<std::size_t>(mean ? j : j - fit.beta_hat.size());
    const auto& names = mean ? fit.spec.mean_cols : fit.spec.disp_cols;
    row.name = idx < names.size() ? names[idx] : std::to_string(idx);
    row.estimate = theta[j];
    row.std_error = std::sqrt(std::max(0.0, vcov(j, j)));
    if (row.estimate == 0.0) {
      row.z_stat = 0.0;
      row.p_value = 1.0;
    } else {
      row.z_stat = row.estimate / row.std_error;
      row.p_value = std::erfc(std::fabs(row.z_stat) / std::sqrt(2.0));
    }
    rows.push_back(row);
  }
  return rows;
}

struct LrTestResult {
  double stat = 0.0;
  int df = 1;
  double p_value = 1.0;
};

/// Likelihood-ratio test of constant dispersion: `reduced` must share the
/// mean submodel of `full` and keep only the dispersion intercept.
inline LrTestResult lr_constant_dispersion(const FittedBetaReg& full,
                                           const FittedBetaReg& reduced) {
  if (full.spec.mean_cols != reduced.spec.mean_cols ||
      full.spec.mean_link != reduced.spec.mean_link ||
      full.beta_hat.size() != reduced.beta_hat.size()) {
    throw UsageError("LR test: full and reduced fits have different mean submodels");
  }
  if (reduced.gamma_hat.size() != 1) {
    throw UsageError("LR test: reduced fit must have an intercept-only dispersion submodel");
  }
  if (full.gamma_hat.size() < 2) {
    throw UsageError("LR test: full fit has no dispersion covariates to test");
  }
  LrTestResult out;
  out.df = static_cast<int>(full.gamma_hat.size()) - 1;
  double stat = 2.0 * (full.loglik - reduced.loglik);
  if (stat < 0.0) {
    if (stat < -1e-8) {
      throw ConvergenceError("LR test: restricted fit has higher likelihood than the full fit");
    }
    stat = 0.0;
  }
  out.stat = stat;
  out.p_value = specfun::chi_square_sf(stat, out.df);
  return out;
}

}  // namespace betachart
