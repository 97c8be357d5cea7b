#include <cmath>

#include <gtest/gtest.h>

#include "betachart/links.hpp"

using namespace betachart;

namespace {
constexpr LinkKind kAll[] = {LinkKind::Logit, LinkKind::Probit, LinkKind::Cloglog};
}

TEST(Links, KnownValues) {
  EXPECT_EQ(link_eval(LinkKind::Logit, 0.5), 0.0);
  EXPECT_EQ(link_eval(LinkKind::Probit, 0.5), 0.0);
  EXPECT_NEAR(link_eval(LinkKind::Logit, 0.413), std::log(0.413 / 0.587), 1e-15);
  EXPECT_NEAR(link_eval(LinkKind::Logit, 0.413), -0.3516, 1e-4);
  EXPECT_NEAR(link_eval(LinkKind::Cloglog, 0.3), std::log(-std::log(0.7)), 1e-15);
  EXPECT_EQ(link_inv(LinkKind::Logit, 0.0), 0.5);
  EXPECT_NEAR(link_inv(LinkKind::Logit, -0.35), 0.41338242108266994221, 1e-16);
  EXPECT_NEAR(link_inv(LinkKind::Cloglog, -0.5), 0.45476078810739494458, 1e-16);
  EXPECT_EQ(link_inv_deriv(LinkKind::Logit, 0.0), 0.25);
  EXPECT_NEAR(link_inv_deriv(LinkKind::Probit, 0.7), 0.31225393336676125711, 1e-16);
}

TEST(Links, RoundTrip) {
  for (LinkKind k : kAll) {
    for (double eta = -30.0; eta <= 30.0; eta += 0.37) {
      const double v = link_inv(k, eta);
      if (v <= kLinkClamp || v >= 1.0 - kLinkClamp) continue;
      // v carries about one ulp of rounding from link_inv plus one from storage;
      // each moves eta by ulp(v) / (dv/deta).
      const double ulp = std::nextafter(v, 2.0) - v;
      EXPECT_NEAR(link_eval(k, v), eta, 1e-9 + 2.0 * ulp / link_inv_deriv(k, eta))
          << to_string(k) << " eta=" << eta;
    }
    for (double v : {1e-10, 0.01, 0.37, 0.5, 0.81, 0.999}) {
      EXPECT_NEAR(link_inv(k, link_eval(k, v)), v, 1e-12 * std::max(v, 1e-3));
    }
  }
}

TEST(Links, InverseIsClampedAndIncreasing) {
  for (LinkKind k : kAll) {
    EXPECT_EQ(link_inv(k, -1e6), kLinkClamp);
    EXPECT_EQ(link_inv(k, 1e6), 1.0 - kLinkClamp);
    const double mid = link_inv(k, 0.0);
    EXPECT_GT(mid, 0.0);
    EXPECT_LT(mid, 1.0);
    double prev = 0.0;
    for (double eta = -40.0; eta <= 40.0; eta += 0.05) {
      const double v = link_inv(k, eta);
      if (v > kLinkClamp && prev > kLinkClamp && v < 1.0 - kLinkClamp) {
        EXPECT_GT(v, prev) << to_string(k) << " eta=" << eta;
      } else {
        EXPECT_GE(v, prev) << to_string(k) << " eta=" << eta;
      }
      prev = v;
    }
  }
}

TEST(Links, DerivativeMatchesFiniteDifference) {
  for (LinkKind k : kAll) {
    for (double eta = -6.0; eta <= 3.0; eta += 0.25) {
      const double h = 1e-5;
      const double fd =
          (detail::link_inv_raw(k, eta + h) - detail::link_inv_raw(k, eta - h)) / (2.0 * h);
      EXPECT_NEAR(link_inv_deriv(k, eta), fd, 1e-7) << to_string(k) << " eta=" << eta;
    }
  }
}

TEST(Links, DerivativeStrictlyPositive) {
  for (LinkKind k : kAll) {
    for (double eta : {-1e4, -800.0, -40.0, 0.0, 40.0, 800.0, 1e4}) {
      EXPECT_GT(link_inv_deriv(k, eta), 0.0) << to_string(k) << " eta=" << eta;
    }
  }
}

TEST(Links, Names) {
  for (LinkKind k : kAll) EXPECT_EQ(parse_link(to_string(k)), k);
  EXPECT_THROW(parse_link("cauchit"), UsageError);
  EXPECT_THROW(link_eval(LinkKind::Logit, 0.0), DomainError);
  EXPECT_THROW(link_eval(LinkKind::Logit, 1.0), DomainError);
  EXPECT_THROW(link_inv(LinkKind::Logit, std::nan("")), DomainError);
}
