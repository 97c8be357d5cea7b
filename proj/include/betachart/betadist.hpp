#pragma once

// Beta distribution in the shape parametrization (theta1, theta2) and the
// mean/dispersion parametrization (mu, sigma), where
//   mu = theta1 / (theta1 + theta2),  sigma^2 = 1 / (1 + theta1 + theta2).

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "betachart/errors.hpp"
#include "betachart/rng.hpp"
#include "betachart/specfun.hpp"

namespace betachart {

struct ShapePair {
  double theta1;
  double theta2;

  ShapePair(double t1, double t2) : theta1(t1), theta2(t2) {
    if (!std::isfinite(t1) || !std::isfinite(t2) || !(t1 > 0.0) || !(t2 > 0.0)) {
      throw DomainError("ShapePair: both shape parameters must be finite and > 0");
    }
  }
};

struct MuSigma {
  double mu;
  double sigma;

  MuSigma(double m, double s) : mu(m), sigma(s) {
    if (!(m > 0.0 && m < 1.0) || !(s > 0.0 && s < 1.0)) {
      throw DomainError("MuSigma: mu and sigma must lie strictly inside (0, 1)");
    }
  }

  /// Precision phi = (1 - sigma^2) / sigma^2 = theta1 + theta2.
  double precision() const noexcept { return (1.0 - sigma * sigma) / (sigma * sigma); }
};

inline ShapePair to_shape(const MuSigma& p) {
  const double phi = p.precision();
  return {p.mu * phi, (1.0 - p.mu) * phi};
}

inline MuSigma to_musigma(const ShapePair& s) {
  const double total = s.theta1 + s.theta2;
  return {s.theta1 / total, std::sqrt(1.0 / (1.0 + total))};
}

namespace detail {

inline void require_open_unit(double y, const char* fn) {
  if (!(y > 0.0 && y < 1.0)) {
    throw DomainError(std::string(fn) + ": y must lie strictly inside (0, 1)");
  }
}

}  // namespace detail

inline double log_pdf(double y, const ShapePair& s) {
  detail::require_open_unit(y, "log_pdf");
  return (s.theta1 - 1.0) * std::log(y) + (s.theta2 - 1.0) * std::log1p(-y) -
         specfun::log_beta(s.theta1, s.theta2);
}

inline double log_pdf(double y, const MuSigma& p) { return log_pdf(y, to_shape(p)); }

inline double cdf(double y, const MuSigma& p) {
  detail::require_open_unit(y, "cdf");
  const ShapePair s = to_shape(p);
  return specfun::reg_inc_beta(y, s.theta1, s.theta2);
}

inline double quantile(double alpha, const MuSigma& p) {
  const ShapePair s = to_shape(p);
  return specfun::inv_reg_inc_beta(alpha, s.theta1, s.theta2);
}

struct Moments {
  double mean;
  double variance;
};

inline Moments mean_var(const MuSigma& p) {
  return {p.mu, p.mu * (1.0 - p.mu) * p.sigma * p.sigma};
}

/// One Beta variate as G1 / (G1 + G2), evaluated from log-gamma variates and
/// kept strictly inside (0, 1).
inline double sample_one(Stream& rng, const ShapePair& s) {
  const double l1 = log_gamma_variate(rng, s.theta1);
  const double l2 = log_gamma_variate(rng, s.theta2);
  const double y = 1.0 / (1.0 + std::exp(l2 - l1));
  constexpr double kLow = std::numeric_limits<double>::min();
  const double high = std::nextafter(1.0, 0.0);
  return y < kLow ? kLow : (y > high ? high : y);
}

inline std::vector<double> sample(Stream& rng, const MuSigma& p, std::size_t n) {
  if (n == 0) throw DomainError("sample: n must be >= 1");
  const ShapePair s = to_shape(p);
  std::vector<double> out(n);
  for (auto& y : out) y = sample_one(rng, s);
  return out;
}

}  // namespace betachart
