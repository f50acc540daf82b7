#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "subgeo/chains.hpp"
#include "subgeo/coupling.hpp"
#include "subgeo/rates.hpp"

namespace subgeo {

enum class DriftMethod { ExactRow, MonteCarlo };

struct DriftMethodSpec {
  DriftMethod kind = DriftMethod::ExactRow;
  int n_reps = 4000;          // antithetic pairs per point
  double confidence = 0.975;  // one-sided
  std::uint64_t seed = 1;
  int threads = 0;
};

enum class PointStatus { Holds, Violated, Undecided };
const char* to_string(PointStatus s);

/// Estimate of PV(x) - V(x) at one point.
struct IncrementEstimate {
  double mean = 0;
  double se = 0;
  bool exact = true;
};

/// A chain together with its Lyapunov function and a list of check points.
/// `increment(i, method, rng)` estimates PV - V at point i.
struct DriftModel {
  std::string chain;
  std::string lyapunov;
  std::size_t n_points = 0;
  std::function<double(std::size_t)> log_V;
  std::function<IncrementEstimate(std::size_t, const DriftMethodSpec&, Rng&)> increment;
  bool supports_exact = false;
};

/// Lattice points given by index; exact rows or row sampling.
DriftModel srwm_drift_model(const LatticeSpec& spec, double s_exponent, std::vector<int> indices);
/// Monte Carlo with antithetic noise z / -z.
DriftModel ar_drift_model(const ARSpec& spec, std::vector<Eigen::VectorXd> points);
/// Monte Carlo with antithetic z / -z, Rao-Blackwellized over the uniform.
DriftModel pcn_drift_model(const PcnSpec& spec, std::vector<Eigen::VectorXd> points);

/// Log-spaced radii in [r_min, r_max] plus the origin, along `directions`
/// unit vectors of dimension p (the first is e_1, the rest fixed pseudo-random).
std::vector<Eigen::VectorXd> radial_points(int p, double r_min, double r_max, int n_radii, int directions,
                                           std::uint64_t seed);

/// Per-point increments; parallel over points, point i uses seed_derive(seed, i).
std::vector<IncrementEstimate> drift_increments(const DriftModel& model, const DriftMethodSpec& method);

struct DriftCertificate {
  explicit DriftCertificate(ConcaveRate p) : phi(std::move(p)) {}

  ConcaveRate phi;
  std::string chain;
  std::string lyapunov;
  double b = 0;
  DriftMethodSpec method;
  std::vector<double> log_V;
  std::vector<IncrementEstimate> increments;
  std::vector<double> increment_ucb;  // = mean for exact rows
  std::vector<double> slack;          // PV - V + phi(V), point estimate
  std::vector<PointStatus> status;
  double max_violation = 0;  // max over points of (upper slack - b)
  long violated = 0, undecided = 0;
  bool valid = false;
};

/// Checks PV <= V - phi(V) + b at every point.
DriftCertificate check_single_drift(const DriftModel& model, const ConcaveRate& phi, double b,
                                    const DriftMethodSpec& method);
/// Same, reusing increments already computed for this model and method.
DriftCertificate certify_drift(const DriftModel& model, std::vector<IncrementEstimate> increments,
                               const ConcaveRate& phi, double b, const DriftMethodSpec& method);

/// Plain geometric check PV <= zeta V + b (phi(t) = (1 - zeta) t, not in F).
struct GeometricDriftReport {
  double zeta = 0, b = 0;
  long violated = 0, undecided = 0;
  bool valid = false;
};
GeometricDriftReport check_geometric_drift(const DriftModel& model, double zeta, double b,
                                           const DriftMethodSpec& method);

struct DriftCalibration {
  double c = 0;
  double b = 0;
  double b_min = 0;  // max slack before the margin
  DriftCertificate certificate;        // on the calibration points
  DriftCertificate revalidation;       // on the fresh points
  std::vector<double> c_grid_tried;
};

/// Walks c down a geometric grid from c_hi; c is feasible when the upper
/// slack profile (sorted by V) is nonincreasing over its outer quarter, i.e.
/// the inequality is driven by the tail and b only absorbs a bounded region.
/// b = max slack + margin (5% of |max slack|, at least 1e-9); the pair must
/// re-validate on `fresh`. Throws CertificationError when nothing in the grid
/// qualifies.
DriftCalibration calibrate_drift(const DriftModel& model, const DriftModel& fresh, const ConcaveRate& base_phi,
                                 const DriftMethodSpec& method, double c_hi = 1.0, double factor = 0.98,
                                 int steps = 900);

struct DoubleDriftParams {
  ConcaveRate phi_double;  // c phi
  double upsilon = 0;
  double c = 0;
  CouplingSet delta;  // {V <= upsilon}^2
  double b_double = 0;
};

/// phi^{-1}(4b): the level at which c = 1/2.
double default_upsilon(const DriftCertificate& cert);
/// c = 1 - 2b/phi(upsilon), b_double = 2b. Requires upsilon > phi^{-1}(2b).
DoubleDriftParams single_to_double(const DriftCertificate& cert, double upsilon);

struct DoubleDriftReport {
  long pairs = 0, in_delta = 0, holds = 0, violated = 0, undecided = 0;
  double sup_delta_V = 0;  // sup of V(x) + V(y) over checked Delta pairs
  bool sup_within_2upsilon = true;
  double max_violation = -INFINITY;
  bool valid = false;
};

/// PV(x) + PV(y) <= V(x) + V(y) - c phi(V(x) + V(y)) + b_double 1_Delta at
/// each pair of check points, from the certificate's per-point increments.
DoubleDriftReport check_double_drift(const DriftCertificate& cert, const DoubleDriftParams& params,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

/// All pairs (i, j), i <= j, of a thinned subset of the check points.
std::vector<std::pair<std::size_t, std::size_t>> pair_grid(std::size_t n_points, std::size_t max_per_axis);

struct SequenceDriftReport {
  double b_seq = 0;
  long checks = 0, holds = 0, violated = 0, undecided = 0;
  bool v0_dominated = true;  // V_0(x, y) <= V(x) + V(y)
  double max_violation = -INFINITY;
  bool valid = false;
};

/// b_seq = step_ratio * b_double / r(0).
double sequence_b(const RateKit& kit, double b_double, double step_ratio);

/// Q V_{n+1}(x,y) <= V_n(x,y) - r(n) + b_seq r(n) 1_Delta(x,y), exactly on
/// the lattice (product rows), for n = 0..n_max.
SequenceDriftReport check_sequence_drift_lattice(const LatticeSpec& spec, double s_exponent, const RateKit& kit,
                                                 const CouplingSet& delta, double b_double, double step_ratio,
                                                 const std::vector<std::pair<int, int>>& pairs, int n_max);

/// Monte Carlo version for a general coupling kernel.
template <class S, class Step, class LogV>
SequenceDriftReport check_sequence_drift_mc(Step step, LogV log_V, const CouplingSet& delta, const RateKit& kit,
                                            double b_double, double step_ratio,
                                            const std::vector<std::pair<S, S>>& pairs, int n_max, int n_reps,
                                            std::uint64_t seed, double confidence = 0.975, int threads = 0) {
  SequenceDriftReport rep;
  rep.b_seq = sequence_b(kit, b_double, step_ratio);
  const double z = numerics::normal_quantile(confidence);
  const std::size_t P = pairs.size();
  struct Cell {
    long holds = 0, violated = 0, undecided = 0;
    double worst = -INFINITY;
    bool dominated = true;
  };
  std::vector<Cell> cells(P);
  parallel_for(P, threads > 0 ? threads : default_threads(), [&](std::size_t p) {
    const auto& [x, y] = pairs[p];
    const double lvx = log_V(x), lvy = log_V(y);
    const double u = std::exp(lvx) + std::exp(lvy);
    const bool in = delta.contains(0, 0, lvx, lvy);
    Rng rng = seed_derive(seed, p);
    std::vector<double> us(static_cast<std::size_t>(n_reps));
    for (auto& v : us) {
      auto nx = step(x, y, rng);
      v = std::exp(log_V(nx.first)) + std::exp(log_V(nx.second));
    }
    Cell& c = cells[p];
    c.dominated = kit.H_k(0, u) <= u * (1 + 1e-12);
    for (int n = 0; n <= n_max; ++n) {
      double s = 0, s2 = 0;
      for (double v : us) {
        const double w = kit.H_k(n + 1, v);
        s += w;
        s2 += w * w;
      }
      const double m = s / n_reps;
      const double se = std::sqrt(std::max(0.0, s2 / n_reps - m * m) / std::max(1, n_reps - 1));
      const double rn = kit.r(n);
      const double rhs = kit.H_k(n, u) - rn + (in ? rep.b_seq * rn : 0.0);
      c.worst = std::max(c.worst, m - rhs);
      if (m + z * se <= rhs)
        ++c.holds;
      else if (m - z * se > rhs)
        ++c.violated;
      else
        ++c.undecided;
    }
  });
  for (const auto& c : cells) {
    rep.holds += c.holds;
    rep.violated += c.violated;
    rep.undecided += c.undecided;
    rep.checks += c.holds + c.violated + c.undecided;
    rep.max_violation = std::max(rep.max_violation, c.worst);
    rep.v0_dominated = rep.v0_dominated && c.dominated;
  }
  rep.valid = rep.violated == 0 && rep.undecided == 0 && rep.v0_dominated;
  return rep;
}

}  // namespace subgeo
