#include "subgeo/chains.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "subgeo/error.hpp"

namespace subgeo {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError("chains", what);
}

}  // namespace

// ---------------------------------------------------------------------------
// lattice

int LatticeSpec::index(double x) const {
  const double k = 4 * x;
  const double kr = std::round(k);
  require(std::abs(k - kr) < 1e-9, "point " + std::to_string(x) + " is not on the quarter lattice");
  require(std::abs(kr) <= K, "point " + std::to_string(x) + " outside the truncation");
  return static_cast<int>(kr) + K;
}

void LatticeSpec::validate() const {
  require(h > 0 && h < 0.5, "lattice h must lie in (0, 1/2)");
  require(K >= 1, "lattice K must be positive");
}

double srwm_accept(const LatticeSpec& spec, double x, double y) {
  const double ratio = (1 + std::abs(x)) / (1 + std::abs(y));
  if (ratio >= 1) return 1.0;
  return std::pow(ratio, 1 + spec.h);
}

LatticeRow srwm_row(const LatticeSpec& spec, int i) {
  require(i >= 0 && i < spec.size(), "lattice index out of range");
  const double x = spec.state(i);
  LatticeRow row;
  // proposals leaving the truncation are rejected
  if (i > 0) row.down = srwm_accept(spec, x, x - 0.25) / 3.0;
  if (i + 1 < spec.size()) row.up = srwm_accept(spec, x, x + 0.25) / 3.0;
  row.stay = 1.0 - row.down - row.up;
  return row;
}

LatticeDist srwm_row(const LatticeSpec& spec, double x) {
  const int i = spec.index(x);
  const LatticeRow row = srwm_row(spec, i);
  LatticeDist d(static_cast<std::size_t>(spec.size()), 0.0);
  d[static_cast<std::size_t>(i)] = row.stay;
  if (i > 0) d[static_cast<std::size_t>(i - 1)] = row.down;
  if (i + 1 < spec.size()) d[static_cast<std::size_t>(i + 1)] = row.up;
  return d;
}

std::vector<LatticeRow> srwm_rows(const LatticeSpec& spec) {
  std::vector<LatticeRow> rows(static_cast<std::size_t>(spec.size()));
  for (int i = 0; i < spec.size(); ++i) rows[static_cast<std::size_t>(i)] = srwm_row(spec, i);
  return rows;
}

void srwm_step_dist(const std::vector<LatticeRow>& rows, const LatticeDist& in, LatticeDist& out) {
  const std::size_t n = rows.size();
  out.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double v = in[j] * rows[j].stay;
    if (j > 0) v += in[j - 1] * rows[j - 1].up;
    if (j + 1 < n) v += in[j + 1] * rows[j + 1].down;
    out[j] = v;
  }
}

LatticeDist srwm_evolve(const LatticeSpec& spec, const LatticeDist& init, long n, double max_work) {
  require(static_cast<int>(init.size()) == spec.size(), "distribution size does not match the lattice");
  require(n >= 0, "number of steps must be nonnegative");
  if (static_cast<double>(n) * spec.size() > max_work)
    throw BudgetError("chains", "srwm_evolve: n*(2K+1) exceeds the work budget");
  const auto rows = srwm_rows(spec);
  LatticeDist cur = init, next;
  for (long s = 0; s < n; ++s) {
    srwm_step_dist(rows, cur, next);
    cur.swap(next);
  }
  return cur;
}

LatticeDist lattice_delta(const LatticeSpec& spec, double x) {
  LatticeDist d(static_cast<std::size_t>(spec.size()), 0.0);
  d[static_cast<std::size_t>(spec.index(x))] = 1.0;
  return d;
}

LatticeDist lattice_stationary(const LatticeSpec& spec) {
  LatticeDist w(static_cast<std::size_t>(spec.size()));
  for (int i = 0; i < spec.size(); ++i)
    w[static_cast<std::size_t>(i)] = std::pow(1 + std::abs(spec.state(i)), -(1 + spec.h));
  const double z = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= z;
  return w;
}

double lattice_truncation_mass(const LatticeSpec& spec) {
  double z = 0;
  for (int i = 0; i < spec.size(); ++i) z += std::pow(1 + std::abs(spec.state(i)), -(1 + spec.h));
  // sum_{k > K} (1 + k/4)^{-(1+h)} <= int_K^inf, on both sides
  const double tail = 2 * (4 / spec.h) * std::pow(1 + spec.K / 4.0, -spec.h);
  return tail / (z + tail);
}

double srwm_lyapunov(double x, double s_exponent) {
  return std::max(1.0, std::pow(std::abs(x), s_exponent));
}

double srwm_drift_increment(const LatticeSpec& spec, int i, double s_exponent) {
  const LatticeRow row = srwm_row(spec, i);
  const double x = spec.state(i);
  const double v = srwm_lyapunov(x, s_exponent);
  double inc = 0;
  if (row.down > 0) inc += row.down * (srwm_lyapunov(x - 0.25, s_exponent) - v);
  if (row.up > 0) inc += row.up * (srwm_lyapunov(x + 0.25, s_exponent) - v);
  return inc;
}

// ---------------------------------------------------------------------------
// autoregression

double ARSpec::lyap_power() const { return std::min(kappa0_eff(), 2 - rho_ar); }

void ARSpec::validate() const {
  require(p >= 1, "ar p must be positive");
  require(rho_ar >= 0 && rho_ar < 2, "ar rho_ar must lie in [0, 2)");
  require(sigma > 0, "ar sigma must be positive");
  require(beta0 > 0, "ar beta0 must be positive");
  require(kappa0 > 0 && kappa0 <= 1, "ar kappa0 must lie in (0, 1]");
  require(beta > 0, "ar beta must be positive");
  if (noise == NoiseKind::TruncatedExp) require(beta < beta0, "ar beta must lie in (0, beta0)");
}

Eigen::VectorXd ar_map(const ARSpec& spec, const Eigen::VectorXd& x) {
  const double n = x.norm();
  if (n == 0) return x;
  return x * std::max(0.5, 1 - std::pow(n, -spec.rho_ar));
}

Eigen::VectorXd ar_step(const ARSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& z) {
  return ar_map(spec, x) + z;
}

double gamma_sample(double shape, Rng& rng) {
  require(shape > 0, "gamma shape must be positive");
  if (shape < 1) {
    const double u = uniform01(rng);
    return gamma_sample(shape + 1, rng) * std::pow(u > 0 ? u : 0x1.0p-53, 1 / shape);
  }
  const double d = shape - 1.0 / 3, c = 1 / std::sqrt(9 * d);
  for (;;) {
    double x, v;
    do {
      x = std_normal(rng);
      v = 1 + c * x;
    } while (v <= 0);
    v = v * v * v;
    const double u = uniform01(rng);
    if (u < 1 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0 && std::log(u) < 0.5 * x * x + d * (1 - v + std::log(v))) return d * v;
  }
}

Eigen::VectorXd ar_noise(const ARSpec& spec, Rng& rng) {
  Eigen::VectorXd z(spec.p);
  for (int j = 0; j < spec.p; ++j) z[j] = std_normal(rng);
  if (spec.noise == NoiseKind::Gaussian) return spec.sigma * z;
  // radial law ∝ r^{p-1} exp(-beta0 r^kappa0): beta0 R^kappa0 ~ Gamma(p/kappa0)
  const double g = gamma_sample(spec.p / spec.kappa0, rng);
  const double radius = std::pow(g / spec.beta0, 1 / spec.kappa0);
  const double n = z.norm();
  return z * (radius / n);
}

double ar_lipschitz_scan(const ARSpec& spec, double M, int n_pairs, Rng& rng) {
  const bool global = !std::isfinite(M);
  const double R = global ? 50.0 : M;
  auto in_ball = [&]() {
    Eigen::VectorXd v(spec.p);
    for (int j = 0; j < spec.p; ++j) v[j] = std_normal(rng);
    const double radius = R * std::pow(uniform01(rng), 1.0 / spec.p);
    return Eigen::VectorXd(v * (radius / v.norm()));
  };
  double worst = 0;
  for (int k = 0; k < n_pairs; ++k) {
    Eigen::VectorXd x = in_ball(), y;
    if (k % 2 == 0) {
      y = in_ball();
    } else {
      // radially aligned neighbour, kept inside the ball
      const double rx = x.norm();
      const double step = 1e-3 * R * uniform01(rng);
      const double ry = std::min(R, rx + step);
      y = x * (ry / rx);
      if (ry == rx) continue;
    }
    const double d = (x - y).norm();
    if (d == 0) continue;
    worst = std::max(worst, (ar_map(spec, x) - ar_map(spec, y)).norm() / d);
  }
  return worst;
}

double ar2_radial_constant(const ARSpec& spec, double M0, double r_max) {
  require(M0 > 0 && r_max > M0, "radial scan needs 0 < M0 < r_max");
  double best = INFINITY;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double r = M0 * std::pow(r_max / M0, static_cast<double>(i) / n);
    const double shrink = std::max(0.5, 1 - std::pow(r, -spec.rho_ar));  // |g(x)|/|x|
    best = std::min(best, (1 - shrink) * std::pow(r, spec.rho_ar));
  }
  return best;
}

// ---------------------------------------------------------------------------
// pCN

void PcnSpec::validate() const {
  require(p >= 1, "pcn p must be positive");
  require(rho >= 0 && rho < 1, "pcn rho must lie in [0, 1)");
  require(eigs.size() == p, "pcn eigs must have p entries");
  require((eigs.array() > 0).all(), "pcn eigenvalues must be positive");
  require(beta > 0 && beta <= 1, "pcn beta must lie in (0, 1]");
  require(Cg > 0, "pcn Cg must be positive");
  require(theta > 0 && theta < 1 / (2 * eigs.maxCoeff()),
          "pcn theta must lie in (0, 1/(2 max eig)) for the Fernique integral to be finite");
}

Eigen::VectorXd PcnSpec::inverse_square_eigs(int p) {
  Eigen::VectorXd e(p);
  for (int j = 0; j < p; ++j) e[j] = 1.0 / ((j + 1.0) * (j + 1.0));
  return e;
}

double pcn_potential(const PcnSpec& spec, const Eigen::VectorXd& x) {
  return -spec.Cg * std::pow(x.norm(), spec.beta);
}

double pcn_accept_prob(const PcnSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return std::min(1.0, std::exp(pcn_potential(spec, x) - pcn_potential(spec, y)));
}

Eigen::VectorXd pcn_noise(const PcnSpec& spec, Rng& rng) {
  Eigen::VectorXd z(spec.p);
  for (int j = 0; j < spec.p; ++j) z[j] = std::sqrt(spec.eigs[j]) * std_normal(rng);
  return z;
}

PcnMove pcn_step(const PcnSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& z, double u) {
  Eigen::VectorXd y = spec.rho * x + std::sqrt(1 - spec.rho * spec.rho) * z;
  if (u <= pcn_accept_prob(spec, x, y)) return {std::move(y), true};
  return {x, false};
}

// ---------------------------------------------------------------------------
// Lyapunov

namespace {
LyapunovValue from_log(double lv) {
  const double v = std::exp(lv);
  return {v, lv, !std::isfinite(v)};
}
}  // namespace

LyapunovValue lyapunov_eval(const LatticeSpec&, double s_exponent, double x) {
  const double ax = std::abs(x);
  return from_log(ax <= 1 ? 0.0 : s_exponent * std::log(ax));
}

double ar_log_lyapunov(const ARSpec& spec, const Eigen::VectorXd& x) {
  return spec.beta * std::pow(x.norm(), spec.lyap_power());
}

double pcn_log_lyapunov(const PcnSpec& spec, const Eigen::VectorXd& x) {
  return spec.s() * x.squaredNorm();
}

LyapunovValue lyapunov_eval(const ARSpec& spec, const Eigen::VectorXd& x) {
  return from_log(ar_log_lyapunov(spec, x));
}

LyapunovValue lyapunov_eval(const PcnSpec& spec, const Eigen::VectorXd& x) {
  return from_log(pcn_log_lyapunov(spec, x));
}

}  // namespace subgeo
