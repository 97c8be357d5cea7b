#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "betachart/errors.hpp"
#include "betachart/specfun.hpp"

namespace betachart {

enum class LinkKind { Logit, Probit, Cloglog };

/// Inverse links are clamped to [kLinkClamp, 1 - kLinkClamp].
inline constexpr double kLinkClamp = 1e-12;

inline std::string_view to_string(LinkKind k) {
  switch (k) {
    case LinkKind::Logit:
      return "logit";
    case LinkKind::Probit:
      return "probit";
    case LinkKind::Cloglog:
      return "cloglog";
  }
  return "unknown";
}

inline LinkKind parse_link(std::string_view name) {
  if (name == "logit") return LinkKind::Logit;
  if (name == "probit") return LinkKind::Probit;
  if (name == "cloglog") return LinkKind::Cloglog;
  throw UsageError("unknown link function '" + std::string(name) +
                   "' (expected logit, probit or cloglog)");
}

inline double link_eval(LinkKind k, double v) {
  if (!(v > 0.0 && v < 1.0)) throw DomainError("link_eval: argument must lie inside (0, 1)");
  switch (k) {
    case LinkKind::Logit:
      return std::log(v) - std::log1p(-v);
    case LinkKind::Probit:
      return specfun::normal_quantile(v);
    case LinkKind::Cloglog:
      return std::log(-std::log1p(-v));
  }
  throw UsageError("link_eval: unsupported link");
}

namespace detail {

inline double link_inv_raw(LinkKind k, double eta) {
  switch (k) {
    case LinkKind::Logit:
      return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
    case LinkKind::Probit:
      return specfun::normal_cdf(eta);
    case LinkKind::Cloglog:
      return -std::expm1(-std::exp(eta));
  }
  throw UsageError("link_inv: unsupported link");
}

}  // namespace detail

inline double link_inv(LinkKind k, double eta) {
  if (std::isnan(eta)) throw DomainError("link_inv: eta is NaN");
  return std::clamp(detail::link_inv_raw(k, eta), kLinkClamp, 1.0 - kLinkClamp);
}

namespace detail {

inline double link_inv_deriv_raw(LinkKind k, double eta) {
  switch (k) {
    case LinkKind::Logit: {
      const double e = std::exp(-std::fabs(eta));
      return e / ((1.0 + e) * (1.0 + e));
    }
    case LinkKind::Probit:
      return specfun::normal_pdf(eta);
    case LinkKind::Cloglog:
      return std::exp(eta - std::exp(eta));
  }
  throw UsageError("link_inv_deriv: unsupported link");
}

}  // namespace detail

/// d link_inv / d eta, ignoring the clamp. Floored at the smallest normal
/// double where it underflows.
inline double link_inv_deriv(LinkKind k, double eta) {
  if (std::isnan(eta)) throw DomainError("link_inv_deriv: eta is NaN");
  return std::max(detail::link_inv_deriv_raw(k, eta), std::numeric_limits<double>::min());
}

}  // namespace betachart
