#include "subgeo/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "subgeo/error.hpp"

namespace subgeo {

DistanceEstimate tv_exact(const LatticeDist& p, const LatticeDist& q) {
  if (p.size() != q.size())
    throw DomainError("metrics", "tv_exact: distributions live on different truncations");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return {std::clamp(0.5 * s, 0.0, 1.0), DistanceKind::ExactTV, std::nullopt};
}

DistanceEstimate wasserstein_upper(const std::vector<double>& values) {
  if (values.empty()) throw DomainError("metrics", "wasserstein_upper: empty trace collection");
  const double n = static_cast<double>(values.size());
  double s = 0;
  for (double v : values) s += v;
  const double mean = s / n;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double se = values.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  return {mean, DistanceKind::CouplingUpper, se};
}

DistanceEstimate comonotone_w1d(std::vector<double> xs, std::vector<double> ys, const MetricSpec& metric) {
  if (xs.size() != ys.size() || xs.empty())
    throw DomainError("metrics", "comonotone_w1d: samples must be nonempty and of equal size");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  std::vector<double> v(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) v[i] = metric(std::abs(xs[i] - ys[i]));
  DistanceEstimate e = wasserstein_upper(v);
  e.kind = DistanceKind::Comonotone1D;
  return e;
}

}  // namespace subgeo
