#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace subgeo::numerics {

struct QuadratureOptions {
  // Local acceptance: |S2 - S1| <= 15 * max(abs_per_unit * width, rel * |S2|).
  double abs_per_unit = 1e-10;
  double rel = 1e-13;
  int max_depth = 60;
  long max_evals = 20'000'000;
};

/// Adaptive Simpson quadrature of f on [a, b]. Throws ConvergenceError when
/// the evaluation budget is exhausted or a non-finite value is met.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureOptions& opts = {});

/// Integral of f over [1, t] computed in the variable w = log s, which keeps
/// the integrand smooth when t spans many orders of magnitude.
double integrate_log_scale(const std::function<double(double)>& f, double lo, double hi,
                           const QuadratureOptions& opts = {});

/// Bisection for an increasing function: returns x in [lo, hi] with
/// f(x) ~ target. Requires f(lo) <= target <= f(hi).
double bisect_increasing(const std::function<double(double)>& f, double target, double lo,
                         double hi, double xtol_rel = 1e-15, int max_iter = 400);

/// Ordinary least squares fit y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Log-spaced points, inclusive of both ends.
std::vector<double> log_space(double lo, double hi, std::size_t count);

/// Standard normal quantile (Acklam's rational approximation refined by one
/// Halley step).
double normal_quantile(double p);

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace subgeo::numerics
