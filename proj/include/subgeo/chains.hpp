#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "subgeo/rng.hpp"

namespace subgeo {

// ---------------------------------------------------------------------------
// Random-walk Metropolis on the quarter lattice, truncated to |k| <= K.
// States are addressed by index i = k + K in [0, 2K].

struct LatticeSpec {
  double h = 0.4;  // target tail index
  int K = 100;     // truncation, states k/4 with |k| <= K

  int size() const { return 2 * K + 1; }
  double state(int i) const { return (i - K) / 4.0; }
  /// Index of lattice point x; throws DomainError if x is not on the lattice.
  int index(double x) const;
  void validate() const;
};

using LatticeDist = std::vector<double>;

/// Transition probabilities from index i to i-1, i, i+1.
struct LatticeRow {
  double down = 0, stay = 0, up = 0;
};

double srwm_accept(const LatticeSpec& spec, double x, double y);
LatticeRow srwm_row(const LatticeSpec& spec, int i);
/// Full transition row from lattice point x as a distribution.
LatticeDist srwm_row(const LatticeSpec& spec, double x);

/// init * P^n. Throws BudgetError when n * (2K+1) exceeds max_work.
LatticeDist srwm_evolve(const LatticeSpec& spec, const LatticeDist& init, long n,
                        double max_work = 1e11);
/// All rows, for repeated stepping.
std::vector<LatticeRow> srwm_rows(const LatticeSpec& spec);
/// out = in * P.
void srwm_step_dist(const std::vector<LatticeRow>& rows, const LatticeDist& in, LatticeDist& out);

LatticeDist lattice_delta(const LatticeSpec& spec, double x);
/// Renormalized restriction of pi(x) ∝ (1+|x|)^{-(1+h)} to the truncation.
LatticeDist lattice_stationary(const LatticeSpec& spec);
/// Upper bound on the pi-mass outside the truncation.
double lattice_truncation_mass(const LatticeSpec& spec);

double srwm_lyapunov(double x, double s_exponent);
/// Exact PV(x) - V(x) = sum_y P(x,y) (V(y) - V(x)).
double srwm_drift_increment(const LatticeSpec& spec, int i, double s_exponent);

// ---------------------------------------------------------------------------
// Nonlinear autoregression X' = g(X) + Z, g(x) = x max(1/2, 1 - |x|^-rho).

enum class NoiseKind { Gaussian, TruncatedExp };

struct ARSpec {
  int p = 2;
  double rho_ar = 1.5;
  NoiseKind noise = NoiseKind::Gaussian;
  double sigma = 1.0;  // Gaussian scale
  double beta0 = 1.0;  // density ∝ exp(-beta0 |z|^kappa0)
  double kappa0 = 1.0;
  double beta = 0.1;  // Lyapunov exponent, V = exp(beta |x|^a)

  /// kappa0 for the noise actually used (Gaussian counts as 1).
  double kappa0_eff() const { return noise == NoiseKind::Gaussian ? 1.0 : kappa0; }
  /// a = kappa0 ∧ (2 - rho).
  double lyap_power() const;
  void validate() const;
};

Eigen::VectorXd ar_map(const ARSpec& spec, const Eigen::VectorXd& x);
Eigen::VectorXd ar_step(const ARSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& z);
Eigen::VectorXd ar_noise(const ARSpec& spec, Rng& rng);

/// Max of |g(x)-g(y)|/|x-y| over sampled pairs in B(0, M) (M = inf samples a
/// wide ball plus radial near-pairs). Includes radially aligned pairs, where
/// the map stretches most.
double ar_lipschitz_scan(const ARSpec& spec, double M, int n_pairs, Rng& rng);

/// Largest r with |g(x)| <= |x| (1 - r |x|^-rho) for |x| in [M0, r_max],
/// from a radial scan.
double ar2_radial_constant(const ARSpec& spec, double M0, double r_max = 1e6);

// ---------------------------------------------------------------------------
// Preconditioned Crank-Nicolson on a p-dimensional truncation.

struct PcnSpec {
  int p = 10;
  double rho = 0.5;
  Eigen::VectorXd eigs;  // covariance eigenvalues
  double beta = 0.5;     // Hölder exponent of g
  double Cg = 1.0;       // Hölder constant of g
  double theta = 0.45;   // Fernique parameter

  double s() const { return (1 - rho) * (1 - rho) * theta / 16; }
  void validate() const;
  static Eigen::VectorXd inverse_square_eigs(int p);
};

/// Built-in potential g(x) = -Cg |x|^beta.
double pcn_potential(const PcnSpec& spec, const Eigen::VectorXd& x);
double pcn_accept_prob(const PcnSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);
Eigen::VectorXd pcn_noise(const PcnSpec& spec, Rng& rng);

struct PcnMove {
  Eigen::VectorXd next;
  bool accepted = false;
};
PcnMove pcn_step(const PcnSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& z, double u);

// ---------------------------------------------------------------------------
// Lyapunov functions. Values beyond the double range are reported through
// log_value with value = inf.

struct LyapunovValue {
  double value;
  double log_value;
  bool overflow;
};

LyapunovValue lyapunov_eval(const LatticeSpec& spec, double s_exponent, double x);
LyapunovValue lyapunov_eval(const ARSpec& spec, const Eigen::VectorXd& x);
LyapunovValue lyapunov_eval(const PcnSpec& spec, const Eigen::VectorXd& x);

double ar_log_lyapunov(const ARSpec& spec, const Eigen::VectorXd& x);
double pcn_log_lyapunov(const PcnSpec& spec, const Eigen::VectorXd& x);

/// Gamma(shape, 1) by Marsaglia-Tsang on top of the portable normal/uniform.
double gamma_sample(double shape, Rng& rng);

}  // namespace subgeo
