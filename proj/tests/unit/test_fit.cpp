#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "betachart/arl.hpp"
#include "betachart/fit.hpp"
#include "support/fixture.hpp"

using namespace betachart;

namespace {

// Direct summation of the per-observation log density with std::lgamma,
// independent of the library's special functions and parametrization code.
double loglik_oracle(const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma,
                     const Dataset& d) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < d.n(); ++t) {
    const double eta = d.X.row(t).dot(beta);
    const double zeta = d.Z.row(t).dot(gamma);
    const double mu = 1.0 / (1.0 + std::exp(-eta));
    const double s2 = std::pow(1.0 / (1.0 + std::exp(-zeta)), 2);
    const double phi = (1.0 - s2) / s2;
    const double y = d.y[t];
    total += std::lgamma(phi) - std::lgamma(mu * phi) - std::lgamma((1.0 - mu) * phi) +
             (mu * phi - 1.0) * std::log(y) + ((1.0 - mu) * phi - 1.0) * std::log(1.0 - y);
  }
  return total;
}

Dataset scenario_sample(const Scenario& s, std::uint64_t rep) {
  const Covariates cov = gen_covariates(s.n, s.master_seed);
  const auto truth = detail::true_parameters(s, cov, {});
  Stream rng = Stream::derive(s.master_seed, rep, 1);
  return Dataset{detail::draw(rng, truth), cov.X, cov.Z};
}

ModelSpec scenario_spec() {
  return ModelSpec{{"(Intercept)", "x1", "x2"}, {"(Intercept)", "z1", "z2"}, LinkKind::Logit,
                   LinkKind::Logit};
}

// Textbook modified Gram-Schmidt least squares.
Eigen::VectorXd gram_schmidt_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = A.rows(), k = A.cols();
  Eigen::MatrixXd Q = A;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    R(j, j) = Q.col(j).norm();
    Q.col(j) /= R(j, j);
    for (Eigen::Index i = j + 1; i < k; ++i) {
      R(j, i) = Q.col(j).dot(Q.col(i));
      Q.col(i) -= R(j, i) * Q.col(j);
    }
  }
  Eigen::VectorXd qb = Q.transpose() * b;
  Eigen::VectorXd x(k);
  for (Eigen::Index j = k - 1; j >= 0; --j) {
    double acc = qb[j];
    for (Eigen::Index i = j + 1; i < k; ++i) acc -= R(j, i) * x[i];
    x[j] = acc / R(j, j);
  }
  (void)n;
  return x;
}

}  // namespace

TEST(Loglik, UniformDensityGivesZero) {
  Dataset d;
  d.y = Eigen::VectorXd::LinSpaced(9, 0.05, 0.95);
  d.X = Eigen::MatrixXd::Ones(9, 1);
  d.Z = Eigen::MatrixXd::Ones(9, 1);
  const double g0 = link_eval(LinkKind::Logit, std::sqrt(1.0 / 3.0));
  EXPECT_NEAR(loglik(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, g0), ModelSpec{}, d),
              0.0, 1e-12);
}

TEST(Loglik, SingleObservation) {
  Dataset d{Eigen::VectorXd::Constant(1, 0.5), Eigen::MatrixXd::Ones(1, 1),
            Eigen::MatrixXd::Ones(1, 1)};
  const double g0 = link_eval(LinkKind::Logit, std::sqrt(0.2));
  EXPECT_NEAR(loglik(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, g0), ModelSpec{}, d),
              std::log(1.5), 1e-13);
}

TEST(Loglik, TireMatchesSummationOracle) {
  const Dataset d = fixture::tire_data();
  Eigen::VectorXd beta(6), gamma(3);
  beta << -3.5807, 0.4507, 0.4656, -0.6716, 0.3054, 0.2106;
  gamma << -3.0847, -0.8563, 0.8582;
  EXPECT_NEAR(loglik(beta, gamma, fixture::tire_spec(), d), loglik_oracle(beta, gamma, d), 1e-4);
}

TEST(Loglik, SpecMismatchIsUsageError) {
  const Dataset d = fixture::tire_data();
  EXPECT_THROW(loglik(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3), fixture::tire_spec(), d),
               UsageError);
}

TEST(Score, MatchesFiniteDifferences) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  const ModelSpec spec = scenario_spec();
  int checked = 0;
  for (int id = 1; id <= kScenarioCount; ++id) {
    const Scenario s = preset_scenario(id);
    const Dataset d = scenario_sample(s, 3);
    const BetaRegLikelihood lik(d, LinkKind::Logit, LinkKind::Logit);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd theta(6);
      for (int j = 0; j < 3; ++j) {
        theta[j] = s.beta[static_cast<std::size_t>(j)] + jitter(gen);
        theta[3 + j] = s.gamma[static_cast<std::size_t>(j)] + jitter(gen);
      }
      const Eigen::VectorXd g = score(theta.head(3), theta.tail(3), spec, d);
      const double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
      for (Eigen::Index j = 0; j < 6; ++j) {
        Eigen::VectorXd tp = theta, tm = theta;
        const double h = 1e-6 * std::max(1.0, std::fabs(theta[j]));
        tp[j] += h;
        tm[j] -= h;
        const double fd = (lik.value(tp) - lik.value(tm)) / (tp[j] - tm[j]);
        EXPECT_NEAR(g[j], fd, 1e-5 * scale) << "scenario " << id << " component " << j;
      }
      ++checked;
    }
  }
  EXPECT_EQ(checked, 120);
}

TEST(Score, OtherLinks) {
  const Dataset d = scenario_sample(preset_scenario(2), 1);
  for (LinkKind mean : {LinkKind::Probit, LinkKind::Cloglog}) {
    for (LinkKind disp : {LinkKind::Logit, LinkKind::Probit, LinkKind::Cloglog}) {
      const BetaRegLikelihood lik(d, mean, disp);
      Eigen::VectorXd theta(6);
      theta << -0.6, 0.4, 0.5, -1.0, -0.3, 0.2;
      const Eigen::VectorXd g = lik.score(theta);
      for (Eigen::Index j = 0; j < 6; ++j) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp[j] += 1e-6;
        tm[j] -= 1e-6;
        EXPECT_NEAR(g[j], (lik.value(tp) - lik.value(tm)) / 2e-6,
                    1e-5 * std::max(1.0, g.lpNorm<Eigen::Infinity>()));
      }
    }
  }
}

TEST(Score, InterceptOnlyDirection) {
  // Responses centred at 0.3: moving the mean intercept towards logit(0.3) must
  // increase the likelihood.
  Dataset d;
  d.y = Eigen::VectorXd::LinSpaced(21, 0.2, 0.4);
  d.X = Eigen::MatrixXd::Ones(21, 1);
  d.Z = Eigen::MatrixXd::Ones(21, 1);
  const Eigen::VectorXd gamma = Eigen::VectorXd::Constant(1, -2.0);
  const double at = link_eval(LinkKind::Logit, 0.3);
  EXPECT_GT(score(Eigen::VectorXd::Constant(1, at - 0.5), gamma, ModelSpec{}, d)[0], 0.0);
  EXPECT_LT(score(Eigen::VectorXd::Constant(1, at + 0.5), gamma, ModelSpec{}, d)[0], 0.0);
}

TEST(Fit, TireDispersionSubmodel) {
  const Dataset d = fixture::tire_data();
  const FittedBetaReg fit = fit_betareg(fixture::tire_spec(), d);
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.gamma_hat[0], -3.0847, 2e-2);
  EXPECT_NEAR(fit.gamma_hat[1], -0.8563, 2e-2);
  EXPECT_NEAR(fit.gamma_hat[2], 0.8582, 2e-2);
  EXPECT_GE(fit.loglik, fit.start_loglik);
  const BetaRegLikelihood lik(d, LinkKind::Logit, LinkKind::Logit);
  EXPECT_LT(lik.score(fit.theta()).lpNorm<Eigen::Infinity>(), 1e-5);
  EXPECT_TRUE((fit.mu_hat.array() > 0.0).all() && (fit.mu_hat.array() < 1.0).all());
  EXPECT_TRUE((fit.sigma_hat.array() > 0.0).all() && (fit.sigma_hat.array() < 1.0).all());
  EXPECT_LT((fit.vcov - fit.vcov.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE((fit.vcov.diagonal().array() >= 0.0).all());
}

TEST(Fit, TireMeanSubmodelTable) {
  const Dataset d = fixture::tire_data();
  const FittedBetaReg fit = fit_betareg(fixture::tire_spec(), d);
  const auto rows = inference(fit, d);
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0].name, "(Intercept)");
  EXPECT_EQ(rows[0].submodel, "mean");
  // Reference fit: -3.5807 (se 0.2140, z -16.73). Observed information here.
  EXPECT_NEAR(rows[0].estimate, -3.5807, 2e-2);
  EXPECT_NEAR(rows[0].std_error, 0.2140, 0.15 * 0.2140);
  EXPECT_NEAR(rows[0].z_stat, -16.73, 0.5);
  EXPECT_EQ(rows[6].submodel, "dispersion");
  EXPECT_EQ(rows[8].name, "x1*x2");
}

TEST(Fit, TireLikelihoodRatio) {
  const ModelSpec spec = fixture::tire_spec();
  const Dataset d = fixture::tire_data();
  ModelSpec reduced_spec = spec;
  reduced_spec.disp_cols = {"(Intercept)"};
  const Dataset dr{d.y, d.X, Eigen::MatrixXd::Ones(d.n(), 1)};
  const auto lr = lr_constant_dispersion(fit_betareg(spec, d), fit_betareg(reduced_spec, dr));
  EXPECT_NEAR(lr.stat, 6.9016, 2e-2);
  EXPECT_EQ(lr.df, 2);
  EXPECT_NEAR(lr.p_value, 0.0317, 1e-3);
  EXPECT_NEAR(lr.p_value, std::exp(-lr.stat / 2.0), 1e-15);
}

TEST(Fit, LikelihoodRatioEdgeCases) {
  const Dataset d = fixture::tire_data();
  ModelSpec spec = fixture::tire_spec();
  spec.disp_cols = {"(Intercept)"};
  const Dataset dr{d.y, d.X, Eigen::MatrixXd::Ones(d.n(), 1)};
  const FittedBetaReg reduced = fit_betareg(spec, dr);
  EXPECT_THROW(lr_constant_dispersion(reduced, reduced), UsageError);

  FittedBetaReg same = fit_betareg(fixture::tire_spec(), d);
  FittedBetaReg fake = reduced;
  fake.loglik = same.loglik;
  const auto lr = lr_constant_dispersion(same, fake);
  EXPECT_EQ(lr.stat, 0.0);
  EXPECT_EQ(lr.p_value, 1.0);

  ModelSpec other = spec;
  other.mean_cols = {"(Intercept)", "x1"};
  fake.spec = other;
  EXPECT_THROW(lr_constant_dispersion(same, fake), UsageError);
}

TEST(Fit, NestedModelsOrderLikelihoods) {
  for (int id : {1, 3}) {
    const Dataset d = scenario_sample(preset_scenario(id), 11);
    const FittedBetaReg full = fit_betareg(scenario_spec(), d);
    ModelSpec r = scenario_spec();
    r.disp_cols = {"(Intercept)"};
    const FittedBetaReg reduced = fit_betareg(r, Dataset{d.y, d.X, Eigen::MatrixXd::Ones(d.n(), 1)});
    EXPECT_GE(full.loglik, reduced.loglik - 1e-8);
  }
}

TEST(Fit, ConsistencyAndStandardErrors) {
  // 500 samples of size 1000 from the third scenario: every coefficient within
  // 3 standard errors of the truth in >= 99% of cases, and squared standard
  // errors within 25% of the Monte Carlo variance of the estimates.
  const Scenario s = preset_scenario(3, 1000, 42);
  const Covariates cov = gen_covariates(s.n, s.master_seed);
  const auto truth = detail::true_parameters(s, cov, {});
  Eigen::VectorXd true_theta(6);
  true_theta << s.beta[0], s.beta[1], s.beta[2], s.gamma[0], s.gamma[1], s.gamma[2];
  constexpr int kReps = 500;
  std::vector<Eigen::VectorXd> estimates(kReps);
  std::vector<Eigen::VectorXd> ses(kReps);
  detail::parallel_for(kReps, 0, [&](std::size_t r) {
    Stream rng = Stream::derive(777, r, 1);
    const Dataset d{detail::draw(rng, truth), cov.X, cov.Z};
    const FittedBetaReg fit = fit_betareg(scenario_spec(), d);
    estimates[r] = fit.theta();
    ses[r] = fit.vcov.diagonal().cwiseSqrt();
  });
  int inside = 0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(6);
  Eigen::VectorXd mean_se2 = Eigen::VectorXd::Zero(6);
  for (int r = 0; r < kReps; ++r) {
    for (int j = 0; j < 6; ++j) {
      inside += std::fabs(estimates[r][j] - true_theta[j]) <= 3.0 * ses[r][j];
    }
    mean += estimates[r] / kReps;
    mean_se2 += ses[r].cwiseAbs2() / kReps;
  }
  EXPECT_GE(inside, static_cast<int>(std::ceil(0.99 * 6 * kReps)));
  Eigen::VectorXd var = Eigen::VectorXd::Zero(6);
  for (int r = 0; r < kReps; ++r) var += (estimates[r] - mean).cwiseAbs2() / (kReps - 1);
  for (int j = 0; j < 6; ++j) {
    EXPECT_NEAR(mean_se2[j] / var[j], 1.0, 0.25) << "coefficient " << j;
  }
}

TEST(Fit, RejectsBadData) {
  Dataset d = fixture::tire_data();
  d.y[3] = 1.0;
  EXPECT_THROW(fit_betareg(fixture::tire_spec(), d), DataError);
  d.y[3] = 5e-11;
  EXPECT_THROW(fit_betareg(fixture::tire_spec(), d), DataError);
  Dataset r = fixture::tire_data();
  r.X.col(2) = r.X.col(1);
  EXPECT_THROW(fit_betareg(fixture::tire_spec(), r), DataError);
  Dataset small = fixture::tire_data();
  small.y = small.y.head(9).eval();
  small.X = small.X.topRows(9).eval();
  small.Z = small.Z.topRows(9).eval();
  EXPECT_THROW(fit_betareg(fixture::tire_spec(), small), DataError);
}

TEST(Fit, NonConvergenceCarriesLastIterate) {
  const Dataset d = fixture::tire_data();
  FitOptions opts;
  opts.optimizer.max_iterations = 2;
  try {
    // Polishing cannot rescue an iterate this far from the optimum.
    FitOptions tight = opts;
    tight.optimizer.grad_tol = 1e-300;
    fit_betareg(fixture::tire_spec(), d, tight);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.last_iterate().size(), 9u);
  }
}

TEST(Ols, MatchesGramSchmidt) {
  std::mt19937_64 gen(23);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 30 + rep, k = 1 + rep % 5;
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y[i] = z(gen);
      for (Eigen::Index j = 0; j < k; ++j) X(i, j) = z(gen);
    }
    const FittedOLS ols = fit_ols(X, y);
    const Eigen::VectorXd ref = gram_schmidt_ls(X, y);
    EXPECT_LT((ols.coef - ref).cwiseAbs().maxCoeff(), 1e-10);
    const double rss = (y - X * ref).squaredNorm();
    EXPECT_NEAR(ols.resid_sd, std::sqrt(rss / static_cast<double>(n - k)), 1e-12);
  }
}

TEST(Ols, InterceptOnlyAndDegenerate) {
  Eigen::VectorXd y(4);
  y << 0.1, 0.2, 0.4, 0.5;
  const FittedOLS ols = fit_ols(Eigen::MatrixXd::Ones(4, 1), y);
  EXPECT_NEAR(ols.coef[0], 0.3, 1e-15);
  EXPECT_FALSE(ols.degenerate());
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, 1, 2, 1, 3, 1, 4;
  const FittedOLS exact = fit_ols(X, X * Eigen::Vector2d(0.1, 0.05));
  EXPECT_TRUE(exact.degenerate());
}

TEST(Inference, ZeroEstimateGivesUnitPValue) {
  const Dataset d = fixture::tire_data();
  FittedBetaReg fit = fit_betareg(fixture::tire_spec(), d);
  fit.beta_hat[1] = 0.0;
  const auto rows = inference(fit, d);
  EXPECT_EQ(rows[1].z_stat, 0.0);
  EXPECT_EQ(rows[1].p_value, 1.0);
}
