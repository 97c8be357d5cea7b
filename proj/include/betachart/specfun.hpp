#pragma once

// Scalar special functions behind the beta distribution and the test
// statistics: log-gamma, digamma, the regularized incomplete beta function and
// its inverse, the regularized upper incomplete gamma function and the
// standard normal CDF/quantile.
//
// Every function validates its arguments and throws DomainError on
// non-finite or out-of-domain input. All routines are stateless.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "betachart/errors.hpp"

namespace betachart::specfun {

namespace detail {

inline void require_positive(double x, const char* fn, const char* arg) {
  if (!std::isfinite(x) || !(x > 0.0)) {
    throw DomainError(std::string(fn) + ": argument " + arg + " must be finite and > 0");
  }
}

inline void require_unit(double x, const char* fn, const char* arg) {
  if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
    throw DomainError(std::string(fn) + ": argument " + arg + " must lie in [0, 1]");
  }
}

}  // namespace detail

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
  detail::require_positive(x, "log_gamma", "x");
  // boost's lgamma is reentrant; std::lgamma writes the global signgam.
  using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
  return boost::math::lgamma(x, Policy());
}

/// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
inline double log_beta(double a, double b) {
  detail::require_positive(a, "log_beta", "a");
  detail::require_positive(b, "log_beta", "b");
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

/// psi(x) = d/dx ln Gamma(x), x > 0.
///
/// Shifts the argument above 10 with psi(x) = psi(x + 1) - 1/x, then sums the
/// asymptotic expansion. Truncation error there is below 1e-16.
inline double digamma(double x) {
  detail::require_positive(x, "digamma", "x");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli terms B_2k / (2k x^2k), k = 1..7, in Horner form.
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 - inv2 * (1.0 / 12.0)))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

namespace detail {

// Continued fraction for I_x(a, b) (modified Lentz). Converges quickly for
// x < (a + 1) / (a + b + 2).
inline double inc_beta_cf(double x, double a, double b) {
  constexpr int kMaxIter = 20000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw ConvergenceError("reg_inc_beta: continued fraction did not converge");
}

// Returns {I_x(a,b), 1 - I_x(a,b)}, each computed without cancellation on the
// side where it is small. `lbeta` is ln B(a, b).
struct BetaTails {
  double lower;
  double upper;
};

inline BetaTails inc_beta_tails(double x, double a, double b, double lbeta) {
  if (x == 0.0) return {0.0, 1.0};
  if (x == 1.0) return {1.0, 0.0};
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double lower = front * inc_beta_cf(x, a, b) / a;
    return {lower, 1.0 - lower};
  }
  const double upper = front * inc_beta_cf(1.0 - x, b, a) / b;
  return {1.0 - upper, upper};
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) = B(x; a, b) / B(a, b).
inline double reg_inc_beta(double x, double a, double b) {
  detail::require_unit(x, "reg_inc_beta", "x");
  detail::require_positive(a, "reg_inc_beta", "a");
  detail::require_positive(b, "reg_inc_beta", "b");
  return std::clamp(detail::inc_beta_tails(x, a, b, log_beta(a, b)).lower, 0.0, 1.0);
}

/// Upper tail 1 - I_x(a, b), accurate when it is tiny.
inline double reg_inc_beta_complement(double x, double a, double b) {
  detail::require_unit(x, "reg_inc_beta_complement", "x");
  detail::require_positive(a, "reg_inc_beta_complement", "a");
  detail::require_positive(b, "reg_inc_beta_complement", "b");
  return std::clamp(detail::inc_beta_tails(x, a, b, log_beta(a, b)).upper, 0.0, 1.0);
}

namespace detail {

// Solves I_x(a, b) = p for p <= 1/2. Newton iterations on ln x, started from
// the mean and kept inside a shrinking bracket; any step that leaves the
// bracket is replaced by bisection (geometric when the bracket spans many
// orders of magnitude, so deep lower tails are reached in few steps).
inline double inv_inc_beta_lower(double p, double a, double b) {
  constexpr int kMaxIter = 200;
  const double lbeta = log_beta(a, b);
  double lo = 0.0;
  double hi = 1.0;
  double x = a / (a + b);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const double f = inc_beta_tails(x, a, b, lbeta).lower - p;
    if (std::fabs(f) <= 4e-16 * p) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return x;

    // dI/d(ln x) = x * pdf(x)
    const double slope = std::exp(a * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta);
    double next = std::numeric_limits<double>::quiet_NaN();
    if (slope > 0.0 && std::isfinite(slope)) {
      next = x * std::exp(-f / slope);
    }
    if (!(next > lo && next < hi)) {
      const double floor = std::max(lo, std::numeric_limits<double>::min());
      next = (hi / floor > 4.0) ? std::sqrt(floor * hi) : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) return x;
    }
    if (std::fabs(next - x) <= 2.0 * std::numeric_limits<double>::epsilon() * x) return next;
    x = next;
  }
  throw ConvergenceError("inv_reg_inc_beta: no convergence after 200 iterations", {x}, kMaxIter);
}

}  // namespace detail

/// Quantile of Beta(a, b): the x in (0, 1) with I_x(a, b) = p, for 0 < p < 1.
inline double inv_reg_inc_beta(double p, double a, double b) {
  if (!std::isfinite(p) || !(p > 0.0) || !(p < 1.0)) {
    throw DomainError("inv_reg_inc_beta: p must lie strictly inside (0, 1)");
  }
  detail::require_positive(a, "inv_reg_inc_beta", "a");
  detail::require_positive(b, "inv_reg_inc_beta", "b");

  constexpr double kMin = std::numeric_limits<double>::min();
  const double one_below = std::nextafter(1.0, 0.0);
  if (p <= 0.5) {
    return std::clamp(detail::inv_inc_beta_lower(p, a, b), kMin, one_below);
  }
  // Upper half: solve the mirrored problem I_{1-x}(b, a) = 1 - p.
  const double mirrored = detail::inv_inc_beta_lower(1.0 - p, b, a);
  return std::clamp(1.0 - mirrored, kMin, one_below);
}

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
inline double reg_upper_inc_gamma(double a, double x) {
  detail::require_positive(a, "reg_upper_inc_gamma", "a");
  if (!std::isfinite(x) || x < 0.0) {
    throw DomainError("reg_upper_inc_gamma: x must be finite and >= 0");
  }
  if (x == 0.0) return 1.0;
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  const double log_front = a * std::log(x) - x - log_gamma(a);

  if (x < a + 1.0) {
    // Series for P(a, x).
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) {
        return std::clamp(1.0 - sum * std::exp(log_front), 0.0, 1.0);
      }
    }
    throw ConvergenceError("reg_upper_inc_gamma: series did not converge");
  }

  // Continued fraction for Q(a, x).
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return std::clamp(std::exp(log_front) * h, 0.0, 1.0);
  }
  throw ConvergenceError("reg_upper_inc_gamma: continued fraction did not converge");
}

/// Upper-tail probability of the chi-square distribution with `df` degrees of
/// freedom.
inline double chi_square_sf(double stat, int df) {
  if (df < 1) throw DomainError("chi_square_sf: df must be >= 1");
  if (!std::isfinite(stat) || stat < 0.0) throw DomainError("chi_square_sf: stat must be >= 0");
  return reg_upper_inc_gamma(0.5 * df, 0.5 * stat);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_pdf(double z) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

/// Standard normal quantile: rational approximation (Acklam) refined with one
/// Halley step against erfc, which brings it to full double precision.
inline double normal_quantile(double p) {
  if (!std::isfinite(p) || !(p > 0.0) || !(p < 1.0)) {
    throw DomainError("normal_quantile: p must lie strictly inside (0, 1)");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;

  double x;
  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - kLow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement; work with the smaller tail to avoid cancellation.
  const double e = (p < 0.5) ? normal_cdf(x) - p
                             : (1.0 - p) - 0.5 * std::erfc(x / std::sqrt(2.0));
  const double u = e / normal_pdf(x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace betachart::specfun
