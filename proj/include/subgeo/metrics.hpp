#pragma once

#include <optional>
#include <vector>

#include "subgeo/chains.hpp"
#include "subgeo/coupling.hpp"

namespace subgeo {

enum class DistanceKind { ExactTV, CouplingUpper, Comonotone1D };

struct DistanceEstimate {
  double value = 0;
  DistanceKind kind = DistanceKind::ExactTV;
  std::optional<double> stderr_;
};

/// (1/2) sum |p_i - q_i|.
DistanceEstimate tv_exact(const LatticeDist& p, const LatticeDist& q);

/// Mean of the per-trace metric values with its standard error.
DistanceEstimate wasserstein_upper(const std::vector<double>& values);

template <class S>
DistanceEstimate wasserstein_upper(const std::vector<CoupledTrace<S>>& traces, std::size_t n) {
  std::vector<double> v;
  v.reserve(traces.size());
  for (const auto& t : traces) v.push_back(n < t.dists.size() ? t.dists[n] : t.dists.back());
  return wasserstein_upper(v);
}

/// Monotone (order-statistic) matching in one dimension. Diagnostic only.
DistanceEstimate comonotone_w1d(std::vector<double> xs, std::vector<double> ys, const MetricSpec& metric);

}  // namespace subgeo
