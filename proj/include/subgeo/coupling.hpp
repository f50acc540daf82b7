#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "subgeo/chains.hpp"
#include "subgeo/numerics.hpp"
#include "subgeo/parallel.hpp"
#include "subgeo/rng.hpp"

namespace subgeo {

// ---------------------------------------------------------------------------
// metric and coupling sets

enum class MetricKind { Trivial, Eta };

/// d0(x,y) = 1{x != y};  d_eta(x,y) = 1 ∧ |x-y|^beta / eta.
struct MetricSpec {
  MetricKind kind = MetricKind::Trivial;
  double eta = 1.0;
  double beta = 1.0;

  /// Metric value from the distance |x - y| (zero exactly when x == y).
  double operator()(double dist) const {
    if (dist == 0) return 0.0;
    if (kind == MetricKind::Trivial) return 1.0;
    return std::min(1.0, std::pow(dist, beta) / eta);
  }
  bool capped(double dist) const { return kind == MetricKind::Trivial || (*this)(dist) >= 1.0; }
};

enum class DeltaKind {
  ProductBall,    // |x| ∨ |y| <= M
  LevelSet,       // V(x) + V(y) <= u
  SublevelSquare  // V(x) <= u and V(y) <= u
};

struct CouplingSet {
  DeltaKind kind = DeltaKind::ProductBall;
  double threshold = 0.5;

  /// Membership from the norms and log-Lyapunov values of the two states.
  bool contains(double norm_x, double norm_y, double logV_x, double logV_y) const {
    switch (kind) {
      case DeltaKind::ProductBall: return std::max(norm_x, norm_y) <= threshold;
      case DeltaKind::LevelSet:
        return numerics::log_add_exp(logV_x, logV_y) <= std::log(threshold);
      case DeltaKind::SublevelSquare: return std::max(logV_x, logV_y) <= std::log(threshold);
    }
    return false;
  }
};

// ---------------------------------------------------------------------------
// coupling kernels

/// Independent coupling off the diagonal, one shared draw on it. States are
/// lattice indices.
std::pair<int, int> couple_srwm(const std::vector<LatticeRow>& rows, std::pair<int, int> pair, Rng& rng);
std::pair<int, int> couple_srwm(const LatticeSpec& spec, std::pair<int, int> pair, Rng& rng);
int srwm_sample(const std::vector<LatticeRow>& rows, int i, Rng& rng);

/// Synchronous coupling: one noise draw for both components.
std::pair<Eigen::VectorXd, Eigen::VectorXd> couple_ar(const ARSpec& spec, const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& y, Rng& rng);

struct PcnPairMove {
  Eigen::VectorXd x, y;
  bool accept_x = false, accept_y = false;
};
/// Basic coupling: shared Gaussian z and shared uniform u.
PcnPairMove couple_pcn(const PcnSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y, Rng& rng);

// ---------------------------------------------------------------------------
// renewal bookkeeping and coupled traces

/// Online T_0 = inf{n >= ell : pair in Delta}, T_j = inf{n >= T_{j-1} + ell : ...}.
class RenewalClock {
 public:
  explicit RenewalClock(int ell) : ell_(ell), next_(ell) {}
  /// Observe the pair at time n (called with n = 0, 1, 2, ...). Returns true
  /// when n is a renewal time.
  bool observe(long n, bool in_delta) {
    if (n >= next_ && in_delta) {
      next_ = n + ell_;
      return true;
    }
    return false;
  }

 private:
  int ell_;
  long next_;
};

template <class S>
struct CoupledTrace {
  std::vector<std::pair<S, S>> pairs;  // optional; empty unless requested
  std::vector<double> dists;           // d(X_n, Y_n), n = 0..n_steps
  std::vector<long> hitting_times;     // T_0 <= T_1 <= ...
  std::optional<long> coalesced_at;
};

/// Simulates a coupled trajectory. `step(x, y, rng)` returns the next pair,
/// `norm(s)` and `logV(s)` feed the coupling set, `distance(x, y)` feeds the
/// metric. Under d0, once the pair coalesces the remaining distances are 0.
template <class S, class Step, class Norm, class LogV, class Distance>
CoupledTrace<S> simulate_coupled(Step&& step, std::pair<S, S> pair0, long n_steps, const CouplingSet& delta,
                                 int ell, const MetricSpec& metric, Norm&& norm, LogV&& logV,
                                 Distance&& distance, Rng& rng, bool keep_pairs = false) {
  CoupledTrace<S> tr;
  tr.dists.reserve(static_cast<std::size_t>(n_steps) + 1);
  RenewalClock clock(ell);
  S x = std::move(pair0.first), y = std::move(pair0.second);
  for (long n = 0;; ++n) {
    const double dist = distance(x, y);
    tr.dists.push_back(metric(dist));
    if (keep_pairs) tr.pairs.emplace_back(x, y);
    if (dist == 0 && !tr.coalesced_at) tr.coalesced_at = n;
    if (clock.observe(n, delta.contains(norm(x), norm(y), logV(x), logV(y)))) tr.hitting_times.push_back(n);
    if (n == n_steps) break;
    auto next = step(x, y, rng);
    x = std::move(next.first);
    y = std::move(next.second);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// exact product-chain oracle on the lattice

struct ProductChainResult {
  std::vector<double> dist_expectation;  // E d0(X_n, Y_n), n = 0..n
  /// tail[m][n] = P[T_m >= n] for m = 0..m_max, n = 0..n
  std::vector<std::vector<double>> tail;
};

/// Evolves the law of the coupled pair (diagonal absorbing) together with
/// the renewal count and the steps left before the next renewal may occur.
ProductChainResult product_chain_exact(const LatticeSpec& spec, std::pair<double, double> pair0, long n,
                                       const CouplingSet& delta, int ell, int m_max,
                                       double max_states = 2e8, double s_exponent = 2.2);

/// Exact 1 - max_{(x,y) in Delta, x != y} P[X_ell != Y_ell] under the lattice
/// coupling, by backward iteration of Q on 1{x == y}.
double lattice_epsilon_exact(const LatticeSpec& spec, const CouplingSet& delta, int ell,
                             double max_work = 5e10, double s_exponent = 2.2);

/// Analytic lower bound for Delta = ProductBall(M): both chains can always
/// step toward each other (or one can stay), each with probability >= 1/3,
/// so within ell = ceil(4M) steps they meet with probability >= (1/3)^{8M}.
/// Returns log epsilon.
double lattice_log_epsilon_ball_bound(double M);

/// Lattice helpers for coupling-set membership (V = V_s).
bool lattice_in_delta(const LatticeSpec& spec, const CouplingSet& delta, double s_exponent, int i, int j);

// ---------------------------------------------------------------------------
// Monte Carlo check of the coupling-set inequality and weak contraction

struct CouplingSetCheck {
  double epsilon_hat = 0;    // 1 - max over Delta-pairs of mean ratio
  double epsilon_lower = 0;  // simultaneous lower confidence bound
  double epsilon_upper = 0;
  double z = 0;              // Bonferroni-corrected normal quantile used
  long pairs_used = 0;
  long skipped_degenerate = 0;
  long weak_contraction_violations = 0;
  std::vector<double> ratio_mean, ratio_se;
};

/// `step(x, y, rng)` is one coupling step; `distance(x, y)` the raw
/// distance fed into `metric`. Pair p uses generator seed_derive(seed, p), so
/// the result does not depend on the worker count.
template <class S, class Step, class Distance>
CouplingSetCheck verify_coupling_set(Step step, Distance distance, const MetricSpec& metric, int ell,
                                     const std::vector<std::pair<S, S>>& delta_pairs,
                                     const std::vector<std::pair<S, S>>& general_pairs, int n_reps,
                                     std::uint64_t seed, double confidence = 0.975, int threads = 0) {
  const int workers = threads > 0 ? threads : default_threads();
  CouplingSetCheck out;
  const std::size_t P = delta_pairs.size();
  std::vector<double> mean(P, NAN), se(P, NAN);
  parallel_for(P, workers, [&](std::size_t p) {
    const double d0 = metric(distance(delta_pairs[p].first, delta_pairs[p].second));
    if (d0 == 0) return;
    Rng rng = seed_derive(seed, p);
    double s = 0, s2 = 0;
    for (int r = 0; r < n_reps; ++r) {
      S x = delta_pairs[p].first, y = delta_pairs[p].second;
      for (int k = 0; k < ell; ++k) {
        auto nx = step(x, y, rng);
        x = std::move(nx.first);
        y = std::move(nx.second);
      }
      const double v = metric(distance(x, y)) / d0;
      s += v;
      s2 += v * v;
    }
    mean[p] = s / n_reps;
    se[p] = std::sqrt(std::max(0.0, s2 / n_reps - mean[p] * mean[p]) / std::max(1, n_reps - 1));
  });
  for (std::size_t p = 0; p < P; ++p)
    if (std::isnan(mean[p])) ++out.skipped_degenerate;
  out.pairs_used = static_cast<long>(P) - out.skipped_degenerate;
  if (out.pairs_used > 0) {
    out.z = numerics::normal_quantile(1 - (1 - confidence) / static_cast<double>(out.pairs_used));
    out.epsilon_hat = INFINITY;
    out.epsilon_lower = INFINITY;
    out.epsilon_upper = INFINITY;
    for (std::size_t p = 0; p < P; ++p) {
      if (std::isnan(mean[p])) continue;
      out.epsilon_hat = std::min(out.epsilon_hat, 1 - mean[p]);
      out.epsilon_lower = std::min(out.epsilon_lower, 1 - mean[p] - out.z * se[p]);
      out.epsilon_upper = std::min(out.epsilon_upper, 1 - mean[p] + out.z * se[p]);
    }
  }
  out.ratio_mean = mean;
  out.ratio_se = se;

  // one-step weak contraction on general pairs
  const std::size_t G = general_pairs.size();
  std::vector<int> bad(G, 0);
  parallel_for(G, workers, [&](std::size_t g) {
    const double d0 = metric(distance(general_pairs[g].first, general_pairs[g].second));
    Rng rng = seed_derive(seed ^ 0x5bd1e995ULL, g);
    double s = 0, s2 = 0;
    for (int r = 0; r < n_reps; ++r) {
      auto nx = step(general_pairs[g].first, general_pairs[g].second, rng);
      const double v = metric(distance(nx.first, nx.second));
      s += v;
      s2 += v * v;
    }
    const double m = s / n_reps;
    const double e = std::sqrt(std::max(0.0, s2 / n_reps - m * m) / std::max(1, n_reps - 1));
    bad[g] = m > d0 + 3 * e + 1e-15 ? 1 : 0;
  });
  for (int b : bad) out.weak_contraction_violations += b;
  return out;
}

}  // namespace subgeo
