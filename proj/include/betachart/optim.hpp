#pragma once

// BFGS ascent with a backtracking (Armijo) line search.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace betachart {

struct BfgsOptions {
  int max_iterations = 500;
  double grad_tol = 1e-6;  // on max |gradient|
  double rel_tol = 1e-10;  // on relative change of the objective
};

struct BfgsResult {
  Eigen::VectorXd x;
  Eigen::VectorXd gradient;
  double value = -std::numeric_limits<double>::infinity();
  double start_value = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Maximizes `f`. `f(x, grad)` returns the objective at x and writes its
/// gradient into `grad`; a non-finite return marks x as infeasible, and any
/// line-search trial landing there is rejected.
template <typename Objective>
BfgsResult maximize_bfgs(Objective&& f, const Eigen::VectorXd& x0, const BfgsOptions& opts = {}) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;
  const Eigen::Index n = x0.size();

  BfgsResult out;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(n);
  double fx = f(x, g);
  out.start_value = fx;
  if (!std::isfinite(fx) || !g.allFinite()) {
    out.x = x;
    out.gradient = g;
    out.value = fx;
    return out;
  }

  // Inverse of the negative Hessian approximation.
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, g.lpNorm<Eigen::Infinity>());
  bool fresh = true;

  Eigen::VectorXd x_new(n), g_new(n);
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    Eigen::VectorXd dir = H * g;
    double slope = g.dot(dir);
    if (!(slope > 0.0)) {
      H.setIdentity();
      H /= std::max(1.0, g.lpNorm<Eigen::Infinity>());
      fresh = true;
      dir = H * g;
      slope = g.dot(dir);
    }

    double step = 1.0;
    double f_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < kMaxHalvings; ++k) {
      x_new = x + step * dir;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && g_new.allFinite() && f_new >= fx + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }

    if (!accepted) {
      if (!fresh) {
        H.setIdentity();
        H /= std::max(1.0, g.lpNorm<Eigen::Infinity>());
        fresh = true;
        continue;
      }
      break;  // stalled at machine precision
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g - g_new;  // gradient change of -f
    const double rel_change = std::fabs(f_new - fx) / std::max(1.0, std::fabs(fx));
    x = x_new;
    g = g_new;
    fx = f_new;

    if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol && rel_change < opts.rel_tol) {
      out.converged = true;
      ++it;
      break;
    }
    if (rel_change <= 8.0 * std::numeric_limits<double>::epsilon()) {
      // Progress is below rounding noise of the objective.
      ++it;
      break;
    }

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) {
        // Rescale the initial matrix before the first update.
        H = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H += ((sy + y.dot(Hy)) * rho * rho) * (s * s.transpose()) -
           rho * (Hy * s.transpose() + s * Hy.transpose());
      fresh = false;
    }
  }

  if (!out.converged && g.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
    // Line search stalled at machine precision on a stationary point.
    out.converged = true;
  }
  out.x = x;
  out.gradient = g;
  out.value = fx;
  out.iterations = it;
  return out;
}

}  // namespace betachart
