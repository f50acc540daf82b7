#include "subgeo/numerics.hpp"

#include <algorithm>
#include <limits>
#include <cstdio>
#include <numeric>
#include <string>

#include "subgeo/error.hpp"

namespace subgeo::numerics {

namespace {

struct Panel {
  double a, m, b;
  double fa, fm, fb;
  double whole;
  int depth;
};

std::string fmt_interval(double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%.6g, %.6g]", a, b);
  return buf;
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureOptions& opts) {
  if (a == b) return 0.0;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  long evals = 0;
  auto call = [&](double x) {
    const double v = f(x);
    ++evals;
    if (!std::isfinite(v))
      throw ConvergenceError("rates", "non-finite integrand at x=" + std::to_string(x));
    return v;
  };

  const double m = 0.5 * (a + b);
  const double fa = call(a), fm = call(m), fb = call(b);
  std::vector<Panel> stack;
  stack.push_back({a, m, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4 * fm + fb), 0});

  // Accumulate with Kahan summation; the panels can number in the tens of
  // thousands for long log-scale ranges.
  double sum = 0.0, comp = 0.0;
  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    const double lm = 0.5 * (p.a + p.m), rm = 0.5 * (p.m + p.b);
    const double flm = call(lm), frm = call(rm);
    const double left = (p.m - p.a) / 6.0 * (p.fa + 4 * flm + p.fm);
    const double right = (p.b - p.m) / 6.0 * (p.fm + 4 * frm + p.fb);
    const double refined = left + right;
    const double err = refined - p.whole;
    const double tol = std::max(opts.abs_per_unit * (p.b - p.a), opts.rel * std::abs(refined));
    if (std::abs(err) <= 15.0 * tol || p.depth >= opts.max_depth) {
      if (p.depth >= opts.max_depth && std::abs(err) > 15.0 * tol * 1e3)
        throw ConvergenceError("rates", "quadrature depth limit on " + fmt_interval(p.a, p.b));
      const double y = refined + err / 15.0 - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    } else {
      stack.push_back({p.a, lm, p.m, p.fa, flm, p.fm, left, p.depth + 1});
      stack.push_back({p.m, rm, p.b, p.fm, frm, p.fb, right, p.depth + 1});
    }
    if (evals > opts.max_evals)
      throw ConvergenceError("rates", "quadrature budget exhausted on " + fmt_interval(a, b));
  }
  return sign * sum;
}

double integrate_log_scale(const std::function<double(double)>& f, double lo, double hi,
                           const QuadratureOptions& opts) {
  if (lo <= 0.0 || hi <= 0.0)
    throw DomainError("rates", "log-scale quadrature needs positive limits");
  auto g = [&](double w) {
    const double s = std::exp(w);
    return f(s) * s;
  };
  return adaptive_simpson(g, std::log(lo), std::log(hi), opts);
}

double bisect_increasing(const std::function<double(double)>& f, double target, double lo,
                         double hi, double xtol_rel, int max_iter) {
  double flo = f(lo), fhi = f(hi);
  if (flo > target || fhi < target)
    throw ConvergenceError("rates", "bisection bracket " + fmt_interval(lo, hi) +
                                        " does not contain target " + std::to_string(target));
  for (int it = 0; it < max_iter; ++it) {
    if (hi - lo <= xtol_rel * std::max(std::abs(lo), std::abs(hi)) ||
        hi - lo <= std::numeric_limits<double>::min())
      break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DomainError("metrics", "least squares needs two or more matched points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = (syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::vector<double> log_space(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

double normal_quantile(double p) {
  if (p <= 0.0 || p >= 1.0) throw DomainError("metrics", "normal quantile needs p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  // one Halley refinement
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

}  // namespace subgeo::numerics
