#include "subgeo/rates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "subgeo/error.hpp"
#include "subgeo/numerics.hpp"

namespace subgeo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogNodeStep = 0.5;
constexpr double kLogNodeMax = 700.0;

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError("rates", what);
}

std::string num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

std::string to_string(RateFamily f) {
  switch (f) {
    case RateFamily::Logarithmic: return "logarithmic";
    case RateFamily::Polynomial: return "polynomial";
    case RateFamily::Subexponential: return "subexponential";
    case RateFamily::PcnDrift: return "pcn_drift";
    case RateFamily::Extended: return "extended";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ConcaveRate

ConcaveRate ConcaveRate::logarithmic(double kappa, double scale) {
  require(kappa > 0, "logarithmic rate needs kappa > 0");
  require(scale > 0, "rate scale must be positive");
  ConcaveRate p;
  p.family_ = RateFamily::Logarithmic;
  p.kappa_ = kappa;
  p.scale_ = scale;
  return p;
}

ConcaveRate ConcaveRate::polynomial(double kappa, double scale) {
  require(kappa > 0 && kappa < 1, "polynomial rate needs kappa in (0,1)");
  require(scale > 0, "rate scale must be positive");
  ConcaveRate p;
  p.family_ = RateFamily::Polynomial;
  p.kappa_ = kappa;
  p.scale_ = scale;
  return p;
}

ConcaveRate ConcaveRate::subexponential(double kappa, double scale) {
  require(kappa > 0, "subexponential rate needs kappa > 0");
  require(scale > 0, "rate scale must be positive");
  ConcaveRate p;
  p.family_ = RateFamily::Subexponential;
  p.kappa_ = kappa;
  p.scale_ = scale;
  return p;
}

ConcaveRate ConcaveRate::pcn_drift(double c, double kappa, double beta, double scale) {
  require(c > 0 && c < 1, "pcn drift rate needs c in (0,1)");
  require(kappa > 0, "pcn drift rate needs kappa > 0");
  require(beta > 0 && beta <= 1, "pcn drift rate needs beta in (0,1]");
  require(scale > 0, "rate scale must be positive");
  ConcaveRate p;
  p.family_ = RateFamily::PcnDrift;
  p.kappa_ = kappa;
  p.c_ = c;
  p.beta_ = beta;
  p.scale_ = scale;

  // c t exp(-(L/kappa)^g), L = log t, is concave exactly where
  // f(L) = L - g kappa^-g L^g - (1-g) >= 0. f is convex with f(0) < 0, so
  // there is a single root; join there (and never below e).
  const double g = beta / 2;
  const double A = g * std::pow(kappa, -g);
  auto f = [&](double L) { return L - A * std::pow(L, g) - (1 - g); };
  double hi = 1.0;
  while (f(hi) < 0) hi *= 2;
  const double Lstar = numerics::bisect_increasing(f, 0.0, 0.0, hi, 1e-15);
  const double M = std::max(std::exp(1.0), std::exp(Lstar) * (1 + 1e-12));

  const double fM = p.raw(M), dM = p.raw_deriv(M);
  require(dM > 0 && fM >= M * dM, "pcn drift rate: join point is not admissible");
  p.has_ext_ = true;
  p.ext_M_ = M;
  p.ext_a_ = 2 * dM - fM / M;
  p.ext_b_ = 2 * (fM - M * dM) / std::sqrt(M);
  return p;
}

ConcaveRate ConcaveRate::scaled(double factor) const {
  require(factor > 0, "rate scale factor must be positive");
  ConcaveRate p = *this;
  p.scale_ *= factor;
  return p;
}

double ConcaveRate::raw(double t) const {
  switch (family_) {
    case RateFamily::Logarithmic: return std::pow(1 + std::log(t), kappa_);
    case RateFamily::Polynomial: return std::pow(t, kappa_);
    case RateFamily::Subexponential: return t * std::pow(1 + std::log(t), -kappa_);
    case RateFamily::PcnDrift: {
      const double L = std::log(t);
      return c_ * t * std::exp(-std::pow(L / kappa_, beta_ / 2));
    }
    case RateFamily::Extended: return base_->eval(t);
  }
  return 0;
}

double ConcaveRate::raw_deriv(double t) const {
  switch (family_) {
    case RateFamily::Logarithmic:
      return kappa_ * std::pow(1 + std::log(t), kappa_ - 1) / t;
    case RateFamily::Polynomial: return kappa_ * std::pow(t, kappa_ - 1);
    case RateFamily::Subexponential: {
      const double L1 = 1 + std::log(t);
      return std::pow(L1, -kappa_ - 1) * (L1 - kappa_);
    }
    case RateFamily::PcnDrift: {
      const double L = std::log(t), g = beta_ / 2;
      const double A = g * std::pow(kappa_, -g);
      return c_ * std::exp(-std::pow(L / kappa_, g)) * (1 - A * std::pow(L, g - 1));
    }
    case RateFamily::Extended: return base_->deriv(t);
  }
  return 0;
}

double ConcaveRate::raw_log_log(double L) const {
  switch (family_) {
    case RateFamily::Logarithmic: return kappa_ * std::log1p(L);
    case RateFamily::Polynomial: return kappa_ * L;
    case RateFamily::Subexponential: return L - kappa_ * std::log1p(L);
    case RateFamily::PcnDrift: return std::log(c_) + L - std::pow(L / kappa_, beta_ / 2);
    case RateFamily::Extended: return base_->log_eval_log(L);
  }
  return 0;
}

double ConcaveRate::lower_domain() const {
  if (has_ext_ || family_ == RateFamily::Polynomial) return 0.0;
  return 1.0;
}

double ConcaveRate::eval(double t) const {
  if (!(t >= lower_domain()))
    throw DomainError("rates", "phi(" + num(t) + ") outside the domain of " + describe());
  if (has_ext_ && t < ext_M_) return scale_ * (ext_a_ * t + ext_b_ * std::sqrt(t));
  return scale_ * raw(t);
}

double ConcaveRate::deriv(double t) const {
  if (!(t >= lower_domain()))
    throw DomainError("rates", "phi'(" + num(t) + ") outside the domain of " + describe());
  if (has_ext_ && t < ext_M_) return scale_ * (ext_a_ + ext_b_ / (2 * std::sqrt(t)));
  return scale_ * raw_deriv(t);
}

double ConcaveRate::log_eval_log(double L) const {
  if (has_ext_ && L < std::log(ext_M_)) return std::log(eval(std::exp(L)));
  if (L < 0 && lower_domain() > 0)
    throw DomainError("rates", "phi(exp(" + num(L) + ")) outside the domain of " + describe());
  return std::log(scale_) + raw_log_log(L);
}

double ConcaveRate::inverse(double y) const {
  const double lo = lower_domain();
  if (y <= eval(lo)) return lo;
  double hi = std::max(2.0, 2 * lo);
  while (eval(hi) < y) {
    hi *= 2;
    if (!std::isfinite(hi)) throw ConvergenceError("rates", "phi inverse: no bracket for " + num(y));
  }
  return numerics::bisect_increasing([this](double t) { return eval(t); }, y, lo, hi, 1e-15);
}

std::string ConcaveRate::describe() const {
  std::string s;
  switch (family_) {
    case RateFamily::Logarithmic: s = "(1+log t)^" + num(kappa_); break;
    case RateFamily::Polynomial: s = "t^" + num(kappa_); break;
    case RateFamily::Subexponential: s = "t/(1+log t)^" + num(kappa_); break;
    case RateFamily::PcnDrift:
      s = num(c_) + " t exp(-(log t/" + num(kappa_) + ")^" + num(beta_ / 2) + ")";
      break;
    case RateFamily::Extended:
      s = "ext(" + base_->describe() + ", M=" + num(ext_M_) + ")";
      break;
  }
  if (scale_ != 1.0) s = num(scale_) + "*" + s;
  return s;
}

ConcaveRate extend_concave(const ConcaveRate& phi, double M) {
  if (!(M > 0) || M < phi.lower_domain())
    throw DomainError("rates", "extension point M=" + num(M) + " outside the domain");
  const double fM = phi.eval(M), dM = phi.deriv(M);
  if (!(dM > 0))
    throw DomainError("rates", "extension at M=" + num(M) + ": phi'(M) <= 0 gives a decreasing extension");
  if (fM < M * dM)
    throw DomainError("rates", "extension at M=" + num(M) + ": phi(M) < M phi'(M), not concave");
  ConcaveRate p;
  p.family_ = RateFamily::Extended;
  p.kappa_ = phi.kappa();
  p.scale_ = 1.0;
  p.base_ = std::make_shared<const ConcaveRate>(phi);
  p.has_ext_ = true;
  p.ext_M_ = M;
  p.ext_a_ = 2 * dM - fM / M;
  p.ext_b_ = 2 * (fM - M * dM) / std::sqrt(M);
  return p;
}

double phi_eval(const ConcaveRate& phi, double t) { return phi.eval(t); }

// ---------------------------------------------------------------------------
// RateKit

RateKit::RateKit(ConcaveRate phi, double quad_tol, double inv_tol, bool allow_closed_form)
    : phi_(std::move(phi)), quad_tol_(quad_tol), inv_tol_(inv_tol) {
  require(quad_tol > 0 && inv_tol > 0, "rate kit tolerances must be positive");
  closed_ = allow_closed_form && (phi_.family() == RateFamily::Polynomial ||
                                  phi_.family() == RateFamily::Subexponential);
  if (closed_) return;

  std::vector<double> ws;
  for (double w = 0; w <= kLogNodeMax; w += kLogNodeStep) ws.push_back(w);
  if (phi_.join_point() > 1) ws.push_back(std::log(phi_.join_point()));
  std::sort(ws.begin(), ws.end());
  ws.erase(std::unique(ws.begin(), ws.end()), ws.end());

  node_t_.reserve(ws.size());
  node_H_.reserve(ws.size());
  node_t_.push_back(1.0);
  node_H_.push_back(0.0);
  for (std::size_t i = 1; i < ws.size(); ++i) {
    const double t = std::exp(ws[i]);
    node_H_.push_back(node_H_.back() + segment(node_t_.back(), t));
    node_t_.push_back(t);
  }
}

double RateKit::segment(double t0, double t1) const {
  numerics::QuadratureOptions opts;
  opts.abs_per_unit = quad_tol_;
  opts.rel = std::min(1e-13, quad_tol_);
  auto g = [this](double w) { return std::exp(w - phi_.log_eval_log(w)); };
  return numerics::adaptive_simpson(g, std::log(t0), std::log(t1), opts);
}

double RateKit::H_from_node(std::size_t i, double t) const {
  return node_H_[i] + segment(node_t_[i], t);
}

double RateKit::H(double t) const {
  if (!(t >= 1)) throw DomainError("rates", "H(" + num(t) + "): argument below 1");
  if (t == 1) return 0.0;
  const double s = phi_.scale();
  const double k = phi_.kappa();
  if (closed_) {
    if (phi_.family() == RateFamily::Polynomial)
      return std::expm1((1 - k) * std::log(t)) / ((1 - k) * s);
    return std::expm1((k + 1) * std::log1p(std::log(t))) / ((k + 1) * s);
  }
  auto it = std::upper_bound(node_t_.begin(), node_t_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - node_t_.begin()) - 1;
  return H_from_node(i, t);
}

double RateKit::log_Hinv_table(double u) const {
  if (u >= node_H_.back()) return kInf;
  auto it = std::upper_bound(node_H_.begin(), node_H_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - node_H_.begin()) - 1;
  double t = node_t_[i], Hc = node_H_[i];
  // H is concave, so the Newton iterate never passes the root.
  for (int iter = 0; iter < 200; ++iter) {
    const double gap = u - Hc;
    if (gap <= 0) return std::log(t);
    const double step = gap * phi_.eval(t);
    const double t_new = t + step;
    if (step <= 1e-3 * inv_tol_ * t) return std::log(t_new);
    Hc += segment(t, t_new);
    t = t_new;
  }
  throw ConvergenceError("rates", "Hinv(" + num(u) + "): Newton iteration did not converge");
}

double RateKit::log_Hinv(double u) const {
  if (!(u >= 0)) throw DomainError("rates", "Hinv(" + num(u) + "): negative argument");
  if (u == 0) return 0.0;
  const double s = phi_.scale();
  const double k = phi_.kappa();
  if (closed_) {
    if (phi_.family() == RateFamily::Polynomial) return std::log1p((1 - k) * s * u) / (1 - k);
    return std::expm1(std::log1p((k + 1) * s * u) / (k + 1));
  }
  return log_Hinv_table(u);
}

double RateKit::Hinv(double u) const { return std::exp(log_Hinv(u)); }

double RateKit::log_r(double t) const { return phi_.log_eval_log(log_Hinv(t)); }

double RateKit::r(double t) const { return std::exp(log_r(t)); }

double RateKit::H_k(double k, double u) const {
  if (!(u >= 1)) throw DomainError("rates", "H_k: u must be >= 1");
  if (!(k >= 0)) throw DomainError("rates", "H_k: k must be >= 0");
  return Hinv(H(u) + k) - Hinv(k);
}

std::vector<double> RateKit::R_by_integration(const std::vector<double>& ts) const {
  numerics::QuadratureOptions opts;
  opts.abs_per_unit = quad_tol_;
  opts.rel = 1e-12;
  std::vector<double> out;
  out.reserve(ts.size());
  double acc = 1.0, prev = 0.0;
  for (double t : ts) {
    require(t >= prev, "R_by_integration: points must be increasing and nonnegative");
    acc += numerics::adaptive_simpson([this](double x) { return r(x); }, prev, t, opts);
    prev = t;
    out.push_back(acc);
  }
  return out;
}

RateKit build_rate_kit(const ConcaveRate& phi, double quad_tol, double inv_tol,
                       bool allow_closed_form) {
  return RateKit(phi, quad_tol, inv_tol, allow_closed_form);
}

double r_phi(const RateKit& kit, double t) { return kit.r(t); }

double H_k(const RateKit& kit, double k, double u) { return kit.H_k(k, u); }

// ---------------------------------------------------------------------------
// Subgeometric constants

std::vector<double> constants_grid(double horizon, std::size_t log_points) {
  std::vector<double> g;
  const int top = static_cast<int>(std::min(64.0, std::floor(horizon)));
  for (int i = 0; i <= top; ++i) g.push_back(i);
  if (horizon > 65) {
    auto tail = numerics::log_space(65.0, horizon, log_points);
    g.insert(g.end(), tail.begin(), tail.end());
  }
  return g;
}

double SubgeomConstants::Mkappa_for(double kappa) const {
  for (const auto& [k, m] : Mkappa)
    if (k == kappa) return m;
  throw DomainError("rates", "M_kappa not computed for kappa=" + num(kappa));
}

namespace {

// Relative slack used when checking monotone profiles.
bool nonincreasing_tail(const std::vector<double>& v, double frac, std::size_t* bad = nullptr) {
  const std::size_t n = v.size();
  const std::size_t start = n - std::max<std::size_t>(2, static_cast<std::size_t>(frac * n));
  for (std::size_t i = start + 1; i < n; ++i) {
    if (v[i] > v[i - 1] + 1e-12 * std::max(1.0, std::abs(v[i - 1]))) {
      if (bad) *bad = i;
      return false;
    }
  }
  return true;
}

}  // namespace

double compute_mkappa(const RateKit& kit, double kappa, double horizon) {
  require(kappa > 0, "M_kappa needs kappa > 0");
  const auto grid = constants_grid(horizon, 2000);
  const double lk = std::log(kappa);
  auto f = [&](double t) { return kit.log_r(t) - kit.log_R(t) - lk; };
  std::ptrdiff_t last = -1;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (f(grid[i]) > 0) last = static_cast<std::ptrdiff_t>(i);
  if (last < 0) return 0.0;
  if (static_cast<std::size_t>(last) + 1 == grid.size())
    throw CertificationError("rates", "r(t) > kappa R(t) persists at the horizon for kappa=" +
                                          num(kappa) + "; M_kappa not certifiable");
  double lo = grid[static_cast<std::size_t>(last)], hi = grid[static_cast<std::size_t>(last) + 1];
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

SubgeomConstants subgeom_constants(const RateKit& kit, int ell, double grid_horizon,
                                   const std::vector<double>& kappa_list) {
  require(ell >= 1, "subgeom_constants: ell must be >= 1");
  require(grid_horizon >= 1000, "subgeom_constants: horizon must cover at least 10^3 points");
  require(grid_horizon >= ell, "subgeom_constants: horizon below ell");

  SubgeomConstants out;
  out.grid_horizon = grid_horizon;
  const auto grid = constants_grid(grid_horizon);
  const std::size_t G = grid.size();
  out.grid_size = G;
  std::vector<double> lr(G), lR(G);
  for (std::size_t i = 0; i < G; ++i) {
    const double L = kit.log_Hinv(grid[i]);
    lR[i] = L;
    lr[i] = kit.phi().log_eval_log(L);
  }

  // c1 over the integers
  const long K = static_cast<long>(std::min(grid_horizon, 1e5));
  std::vector<double> lr_int(static_cast<std::size_t>(K) + 1);
  for (long k = 0; k <= K; ++k) lr_int[static_cast<std::size_t>(k)] = kit.log_r(static_cast<double>(k));
  std::vector<double> c1_profile;
  c1_profile.reserve(static_cast<std::size_t>(K));
  double lsum = -INFINITY, c1_log = -INFINITY;
  for (long k = 1; k <= K; ++k) {
    lsum = numerics::log_add_exp(lsum, lr_int[static_cast<std::size_t>(k - 1)]);
    const double v = kit.log_R(static_cast<double>(k)) - lsum;
    c1_profile.push_back(v);
    c1_log = std::max(c1_log, v);
  }
  std::size_t bad = 0;
  if (!nonincreasing_tail(c1_profile, 0.1, &bad))
    throw CertificationError("rates", "c1 ratio still increasing near the horizon (k=" +
                                          std::to_string(bad + 1) + ")");
  out.c1 = std::exp(c1_log);

  // c2, c5 over grid pairs; profile = running sup over pairs with max index j
  std::vector<double> c2_prof(G), c5_prof(G);
  double c2_log = -INFINITY, c5_log = -INFINITY;
  for (std::size_t j = 0; j < G; ++j) {
    double p2 = -INFINITY, p5 = -INFINITY;
    for (std::size_t i = 0; i <= j; ++i) {
      const double L = kit.log_Hinv(grid[i] + grid[j]);
      p2 = std::max(p2, L - lR[i] - lR[j]);
      p5 = std::max(p5, kit.phi().log_eval_log(L) - lr[i] - lr[j]);
    }
    c2_prof[j] = p2;
    c5_prof[j] = p5;
    c2_log = std::max(c2_log, p2);
    c5_log = std::max(c5_log, p5);
  }
  if (!nonincreasing_tail(c2_prof, 0.1, &bad))
    throw CertificationError("rates", "c2 ratio still increasing near the horizon (t=" +
                                          num(grid[bad]) + ")");
  if (!nonincreasing_tail(c5_prof, 0.1, &bad))
    throw CertificationError("rates", "c5 ratio still increasing near the horizon (t=" +
                                          num(grid[bad]) + ")");
  out.c2 = std::exp(c2_log);
  out.c5 = std::max(1.0, std::exp(c5_log));

  // r0 = max(2, r) when that behaves like a member of Lambda_0 on the grid;
  // otherwise the smallest majorant with log r0(t)/t nonincreasing,
  // r0(t) = exp(t sup_{s>=t} log max(2, r(s))/s).
  const double l2 = std::log(2.0);
  std::vector<double> lr0(G);
  for (std::size_t i = 0; i < G; ++i) lr0[i] = std::max(l2, lr[i]);
  auto lambda0_violation = [&](const std::vector<double>& v) -> std::ptrdiff_t {
    double prev_slope = INFINITY;
    for (std::size_t i = 1; i < G; ++i) {
      if (v[i] < v[i - 1] - 1e-12) return static_cast<std::ptrdiff_t>(i);
      const double slope = v[i] / grid[i];
      if (slope > prev_slope * (1 + 1e-12) + 1e-15) return static_cast<std::ptrdiff_t>(i);
      prev_slope = slope;
    }
    return -1;
  };
  if (lambda0_violation(lr0) >= 0) {
    double env = -INFINITY;
    for (std::size_t i = G; i-- > 1;) {
      env = std::max(env, lr0[i] / grid[i]);
      lr0[i] = grid[i] * env;
    }
    out.r0_spec = "r0(t) = exp(t * sup_{s>=t} log max(2, r(s))/s) (max(2, r) is not in Lambda_0 here)";
    const std::ptrdiff_t bad_i = lambda0_violation(lr0);
    if (bad_i >= 0)
      throw CertificationError("rates", "no Lambda_0 majorant of r on the grid (t=" +
                                            num(grid[static_cast<std::size_t>(bad_i)]) + ")");
  }
  double c3_log = 0, c4_log = 0;
  for (std::size_t i = 0; i < G; ++i) {
    c3_log = std::max(c3_log, lr[i] - lr0[i]);
    c4_log = std::max(c4_log, lr0[i] - lr[i]);
  }
  out.c3 = std::exp(c3_log);
  out.c4 = std::exp(c4_log);
  out.r0_at_1 = std::exp(lr0[1]);  // grid[1] == 1

  double step_log = -INFINITY;
  for (long p = 0; p < K; ++p)
    step_log = std::max(step_log, lr_int[static_cast<std::size_t>(p + 1)] - lr_int[static_cast<std::size_t>(p)]);
  out.step_ratio_grid = std::exp(step_log);
  out.step_ratio = std::min(out.step_ratio_grid, out.c4 * out.r0_at_1);

  for (double k : kappa_list) out.Mkappa.emplace_back(k, compute_mkappa(kit, k, grid_horizon));

  char buf[512];
  std::snprintf(buf, sizeof buf,
                "grid: integers 0..64 plus %zu log-spaced points to T=%.6g; c1 over k<=%ld. "
                "c1, c2, c5 running-sup profiles nonincreasing over the last 10%% of the grid; "
                "r0=max(2,r) nondecreasing with log r0(t)/t nonincreasing on the grid.",
                G > 65 ? G - 65 : 0, grid_horizon, K);
  out.tail_justification = buf;
  return out;
}

}  // namespace subgeo
