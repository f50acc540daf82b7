#include "subgeo/drift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subgeo/error.hpp"
#include "subgeo/numerics.hpp"
#include "subgeo/parallel.hpp"

namespace subgeo {

const char* to_string(PointStatus s) {
  switch (s) {
    case PointStatus::Holds: return "holds";
    case PointStatus::Violated: return "violated";
    case PointStatus::Undecided: return "undecided";
  }
  return "?";
}

namespace {

// V(x) * (V(y)/V(x) - 1) without forming the two large values separately
double v_diff(double log_vx, double log_vy) { return std::exp(log_vx) * std::expm1(log_vy - log_vx); }

IncrementEstimate summarize(double s, double s2, int n) {
  const double m = s / n;
  const double var = std::max(0.0, s2 / n - m * m);
  return {m, std::sqrt(var / std::max(1, n - 1)), false};
}

double z_of(const DriftMethodSpec& m) { return numerics::normal_quantile(m.confidence); }

// tolerance for exact comparisons: rounding in sums of O(V) terms
double exact_tol(double scale) { return 1e-12 * (1 + std::abs(scale)); }

}  // namespace

DriftModel srwm_drift_model(const LatticeSpec& spec, double s_exponent, std::vector<int> indices) {
  spec.validate();
  for (int i : indices)
    if (i < 0 || i >= spec.size()) throw DomainError("drift", "lattice check point outside the truncation");
  DriftModel m;
  m.chain = "srwm";
  m.lyapunov = "V_s(x) = max(1, |x|^s), s = " + std::to_string(s_exponent);
  m.n_points = indices.size();
  m.supports_exact = true;
  auto idx = std::make_shared<std::vector<int>>(std::move(indices));
  auto rows = std::make_shared<std::vector<LatticeRow>>(srwm_rows(spec));
  m.log_V = [spec, s_exponent, idx](std::size_t p) {
    return lyapunov_eval(spec, s_exponent, spec.state((*idx)[p])).log_value;
  };
  m.increment = [spec, s_exponent, idx, rows](std::size_t p, const DriftMethodSpec& method, Rng& rng) {
    const int i = (*idx)[p];
    if (method.kind == DriftMethod::ExactRow) return IncrementEstimate{srwm_drift_increment(spec, i, s_exponent), 0, true};
    const double lv = lyapunov_eval(spec, s_exponent, spec.state(i)).log_value;
    double s = 0, s2 = 0;
    for (int r = 0; r < method.n_reps; ++r) {
      const int k = srwm_sample(*rows, i, rng);
      const double w = v_diff(lv, lyapunov_eval(spec, s_exponent, spec.state(k)).log_value);
      s += w;
      s2 += w * w;
    }
    return summarize(s, s2, method.n_reps);
  };
  return m;
}

DriftModel ar_drift_model(const ARSpec& spec, std::vector<Eigen::VectorXd> points) {
  spec.validate();
  DriftModel m;
  m.chain = "ar";
  m.lyapunov = "V(x) = exp(beta |x|^a), beta = " + std::to_string(spec.beta) +
               ", a = " + std::to_string(spec.lyap_power());
  m.n_points = points.size();
  auto pts = std::make_shared<std::vector<Eigen::VectorXd>>(std::move(points));
  m.log_V = [spec, pts](std::size_t p) { return ar_log_lyapunov(spec, (*pts)[p]); };
  m.increment = [spec, pts](std::size_t p, const DriftMethodSpec& method, Rng& rng) {
    if (method.kind == DriftMethod::ExactRow)
      throw DomainError("drift", "exact rows exist only for the lattice chain");
    const Eigen::VectorXd& x = (*pts)[p];
    const Eigen::VectorXd gx = ar_map(spec, x);
    const double lv = ar_log_lyapunov(spec, x);
    double s = 0, s2 = 0;
    for (int r = 0; r < method.n_reps; ++r) {
      const Eigen::VectorXd z = ar_noise(spec, rng);
      const double w = 0.5 * (v_diff(lv, ar_log_lyapunov(spec, gx + z)) + v_diff(lv, ar_log_lyapunov(spec, gx - z)));
      s += w;
      s2 += w * w;
    }
    return summarize(s, s2, method.n_reps);
  };
  return m;
}

DriftModel pcn_drift_model(const PcnSpec& spec, std::vector<Eigen::VectorXd> points) {
  spec.validate();
  DriftModel m;
  m.chain = "pcn";
  m.lyapunov = "V(x) = exp(s |x|^2), s = " + std::to_string(spec.s());
  m.n_points = points.size();
  auto pts = std::make_shared<std::vector<Eigen::VectorXd>>(std::move(points));
  m.log_V = [spec, pts](std::size_t p) { return pcn_log_lyapunov(spec, (*pts)[p]); };
  m.increment = [spec, pts](std::size_t p, const DriftMethodSpec& method, Rng& rng) {
    if (method.kind == DriftMethod::ExactRow)
      throw DomainError("drift", "exact rows exist only for the lattice chain");
    const Eigen::VectorXd& x = (*pts)[p];
    const double lv = pcn_log_lyapunov(spec, x);
    const double a = std::sqrt(1 - spec.rho * spec.rho);
    double s = 0, s2 = 0;
    for (int r = 0; r < method.n_reps; ++r) {
      const Eigen::VectorXd z = pcn_noise(spec, rng);
      double w = 0;
      for (int sign = -1; sign <= 1; sign += 2) {
        const Eigen::VectorXd y = spec.rho * x + (sign * a) * z;
        // integrated over the uniform: E[V(X1) - V(x)] = alpha(x,y) (V(y) - V(x))
        w += 0.5 * pcn_accept_prob(spec, x, y) * v_diff(lv, pcn_log_lyapunov(spec, y));
      }
      s += w;
      s2 += w * w;
    }
    return summarize(s, s2, method.n_reps);
  };
  return m;
}

std::vector<Eigen::VectorXd> radial_points(int p, double r_min, double r_max, int n_radii, int directions,
                                           std::uint64_t seed) {
  if (p < 1 || directions < 1 || n_radii < 1 || !(r_min > 0) || !(r_max >= r_min))
    throw DomainError("drift", "radial_points: bad arguments");
  std::vector<Eigen::VectorXd> dirs;
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(p);
  e1(0) = 1;
  dirs.push_back(e1);
  Rng rng = seed_derive(seed, 0);
  while (static_cast<int>(dirs.size()) < directions) {
    Eigen::VectorXd v(p);
    for (int k = 0; k < p; ++k) v(k) = std_normal(rng);
    dirs.push_back(v / v.norm());
  }
  std::vector<Eigen::VectorXd> out;
  out.push_back(Eigen::VectorXd::Zero(p));
  for (const auto& d : dirs)
    for (double r : numerics::log_space(r_min, r_max, static_cast<std::size_t>(n_radii))) out.push_back(r * d);
  return out;
}

std::vector<IncrementEstimate> drift_increments(const DriftModel& model, const DriftMethodSpec& method) {
  if (model.n_points == 0) throw DomainError("drift", "no check points");
  if (method.kind == DriftMethod::ExactRow && !model.supports_exact)
    throw DomainError("drift", "exact rows exist only for the lattice chain");
  if (method.kind == DriftMethod::MonteCarlo && method.n_reps < 2)
    throw DomainError("drift", "Monte Carlo needs at least two replicates");
  std::vector<IncrementEstimate> out(model.n_points);
  parallel_for(model.n_points, method.threads > 0 ? method.threads : default_threads(), [&](std::size_t i) {
    Rng rng = seed_derive(method.seed, i);
    out[i] = model.increment(i, method, rng);
  });
  return out;
}

DriftCertificate certify_drift(const DriftModel& model, std::vector<IncrementEstimate> increments,
                               const ConcaveRate& phi, double b, const DriftMethodSpec& method) {
  if (increments.size() != model.n_points) throw DomainError("drift", "increment count does not match points");
  if (!phi.zero_at_origin()) throw DomainError("drift", "the drift rate must satisfy phi(0) = 0");
  DriftCertificate c{phi};
  c.chain = model.chain;
  c.lyapunov = model.lyapunov;
  c.b = b;
  c.method = method;
  c.increments = std::move(increments);
  const double z = method.kind == DriftMethod::ExactRow ? 0.0 : z_of(method);
  c.max_violation = -INFINITY;
  for (std::size_t i = 0; i < model.n_points; ++i) {
    const double lv = model.log_V(i);
    const double v = std::exp(lv);
    const auto& e = c.increments[i];
    const double fv = phi.eval(v);
    const double up = e.mean + z * e.se + fv;
    const double lo = e.mean - z * e.se + fv;
    c.log_V.push_back(lv);
    c.increment_ucb.push_back(e.mean + z * e.se);
    c.slack.push_back(e.mean + fv);
    PointStatus st;
    if (e.exact)
      st = up <= b + exact_tol(v) ? PointStatus::Holds : PointStatus::Violated;
    else if (up <= b)
      st = PointStatus::Holds;
    else if (lo > b)
      st = PointStatus::Violated;
    else
      st = PointStatus::Undecided;
    c.status.push_back(st);
    if (st == PointStatus::Violated) ++c.violated;
    if (st == PointStatus::Undecided) ++c.undecided;
    c.max_violation = std::max(c.max_violation, up - b);
  }
  c.valid = c.violated == 0 && c.undecided == 0;
  return c;
}

DriftCertificate check_single_drift(const DriftModel& model, const ConcaveRate& phi, double b,
                                    const DriftMethodSpec& method) {
  return certify_drift(model, drift_increments(model, method), phi, b, method);
}

GeometricDriftReport check_geometric_drift(const DriftModel& model, double zeta, double b,
                                           const DriftMethodSpec& method) {
  if (!(zeta >= 0 && zeta < 1)) throw DomainError("drift", "geometric drift needs zeta in [0,1)");
  const auto inc = drift_increments(model, method);
  const double z = method.kind == DriftMethod::ExactRow ? 0.0 : z_of(method);
  GeometricDriftReport rep{zeta, b};
  for (std::size_t i = 0; i < inc.size(); ++i) {
    const double v = std::exp(model.log_V(i));
    // PV <= zeta V + b  <=>  PV - V + (1 - zeta) V <= b
    const double up = inc[i].mean + z * inc[i].se + (1 - zeta) * v;
    const double lo = inc[i].mean - z * inc[i].se + (1 - zeta) * v;
    if (inc[i].exact) {
      if (up > b + exact_tol(v)) ++rep.violated;
    } else if (lo > b) {
      ++rep.violated;
    } else if (up > b) {
      ++rep.undecided;
    }
  }
  rep.valid = rep.violated == 0 && rep.undecided == 0;
  return rep;
}

DriftCalibration calibrate_drift(const DriftModel& model, const DriftModel& fresh, const ConcaveRate& base_phi,
                                 const DriftMethodSpec& method, double c_hi, double factor, int steps) {
  if (!(c_hi > 0) || !(factor > 0 && factor < 1) || steps < 1)
    throw DomainError("drift", "calibrate_drift: bad search grid");
  const auto inc = drift_increments(model, method);
  const double z = method.kind == DriftMethod::ExactRow ? 0.0 : z_of(method);
  const std::size_t N = model.n_points;

  std::vector<double> lv(N), v(N), phi1(N);
  for (std::size_t i = 0; i < N; ++i) {
    lv[i] = model.log_V(i);
    v[i] = std::exp(lv[i]);
    phi1[i] = base_phi.eval(v[i]);
  }
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lv[a] < lv[b]; });
  const std::size_t tail_start = N - std::max<std::size_t>(1, N / 4);

  DriftCalibration out{0, 0, 0, DriftCertificate{base_phi}, DriftCertificate{base_phi}, {}};
  double c = c_hi;
  for (int k = 0; k < steps; ++k, c *= factor) {
    out.c_grid_tried.push_back(c);
    // points on one level set of V (several directions) are pooled: the profile is compared level by level
    bool monotone = true;
    double prev_s = -INFINITY, prev_tol = 0;
    for (std::size_t q = tail_start; q < N && monotone;) {
      std::size_t e = q;
      double gs = -INFINITY, gtol = 0;
      for (; e < N && std::abs(lv[order[e]] - lv[order[q]]) <= 1e-12 * std::max(1.0, std::abs(lv[order[q]])); ++e) {
        const std::size_t a = order[e];
        const double sa = inc[a].mean + z * inc[a].se + c * phi1[a];
        if (sa > gs) {
          gs = sa;
          gtol = inc[a].exact ? 1e-12 + 1e-14 * v[a] : z * inc[a].se;
        }
      }
      // exact rows: only rounding in V(x +- 1/4) - V(x) may be forgiven
      if (q > tail_start && gs > prev_s + prev_tol + gtol) monotone = false;
      prev_s = gs;
      prev_tol = gtol;
      q = e;
    }
    if (!monotone) continue;
    double bmax = -INFINITY;
    for (std::size_t i = 0; i < N; ++i) bmax = std::max(bmax, inc[i].mean + z * inc[i].se + c * phi1[i]);
    const double bval = bmax + std::max(1e-9, 0.05 * std::abs(bmax));
    const ConcaveRate phi = base_phi.scaled(c);
    DriftCertificate cert = certify_drift(model, inc, phi, bval, method);
    if (!cert.valid) continue;
    DriftMethodSpec fresh_method = method;
    fresh_method.seed = mix64(method.seed ^ 0x9e3779b97f4a7c15ULL);
    DriftCertificate again = check_single_drift(fresh, phi, bval, fresh_method);
    if (!again.valid) continue;
    out.c = c;
    out.b = bval;
    out.b_min = bmax;
    out.certificate = std::move(cert);
    out.revalidation = std::move(again);
    return out;
  }
  throw CertificationError("drift", "no feasible (c, b) in the search box for " + base_phi.describe());
}

double default_upsilon(const DriftCertificate& cert) { return cert.phi.inverse(4 * cert.b); }

DoubleDriftParams single_to_double(const DriftCertificate& cert, double upsilon) {
  if (!cert.valid) throw CertificationError("drift", "single_to_double needs a valid certificate");
  if (!(cert.b > 0)) throw DomainError("drift", "single_to_double needs b > 0");
  const double fu = cert.phi.eval(upsilon);
  if (!(fu > 2 * cert.b))
    throw DomainError("drift", "upsilon must exceed phi^{-1}(2b) = " + std::to_string(cert.phi.inverse(2 * cert.b)));
  const double c = 1 - 2 * cert.b / fu;
  return {cert.phi.scaled(c), upsilon, c, CouplingSet{DeltaKind::SublevelSquare, upsilon}, 2 * cert.b};
}

std::vector<std::pair<std::size_t, std::size_t>> pair_grid(std::size_t n_points, std::size_t max_per_axis) {
  std::vector<std::size_t> pick;
  if (n_points == 0) return {};
  const std::size_t m = std::max<std::size_t>(1, std::min(n_points, max_per_axis));
  for (std::size_t k = 0; k < m; ++k)
    pick.push_back(m == 1 ? 0 : (k * (n_points - 1)) / (m - 1));
  pick.erase(std::unique(pick.begin(), pick.end()), pick.end());
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < pick.size(); ++a)
    for (std::size_t b = a; b < pick.size(); ++b) out.emplace_back(pick[a], pick[b]);
  return out;
}

DoubleDriftReport check_double_drift(const DriftCertificate& cert, const DoubleDriftParams& params,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  DoubleDriftReport rep;
  const double z = cert.method.kind == DriftMethod::ExactRow ? 0.0 : z_of(cert.method);
  for (const auto& [i, j] : pairs) {
    if (i >= cert.log_V.size() || j >= cert.log_V.size())
      throw DomainError("drift", "pair index outside the certificate's check points");
    ++rep.pairs;
    const double vx = std::exp(cert.log_V[i]), vy = std::exp(cert.log_V[j]);
    const bool in = params.delta.contains(0, 0, cert.log_V[i], cert.log_V[j]);
    if (in) {
      ++rep.in_delta;
      rep.sup_delta_V = std::max(rep.sup_delta_V, vx + vy);
    }
    const auto& ei = cert.increments[i];
    const auto& ej = cert.increments[j];
    const double base = params.phi_double.eval(vx + vy) - (in ? params.b_double : 0.0);
    const double up = ei.mean + ej.mean + z * (ei.se + ej.se) + base;
    const double lo = ei.mean + ej.mean - z * (ei.se + ej.se) + base;
    rep.max_violation = std::max(rep.max_violation, up);
    if (ei.exact && ej.exact) {
      if (up <= exact_tol(vx + vy))
        ++rep.holds;
      else
        ++rep.violated;
    } else if (up <= 0) {
      ++rep.holds;
    } else if (lo > 0) {
      ++rep.violated;
    } else {
      ++rep.undecided;
    }
  }
  rep.sup_within_2upsilon = rep.sup_delta_V <= 2 * params.upsilon;
  rep.valid = rep.violated == 0 && rep.undecided == 0 && rep.sup_within_2upsilon;
  return rep;
}

double sequence_b(const RateKit& kit, double b_double, double step_ratio) {
  return step_ratio * b_double / kit.r(0);
}

SequenceDriftReport check_sequence_drift_lattice(const LatticeSpec& spec, double s_exponent, const RateKit& kit,
                                                 const CouplingSet& delta, double b_double, double step_ratio,
                                                 const std::vector<std::pair<int, int>>& pairs, int n_max) {
  SequenceDriftReport rep;
  rep.b_seq = sequence_b(kit, b_double, step_ratio);
  auto V = [&](int i) { return lyapunov_eval(spec, s_exponent, spec.state(i)).value; };
  auto lV = [&](int i) { return lyapunov_eval(spec, s_exponent, spec.state(i)).log_value; };
  for (const auto& [i, j] : pairs) {
    const auto ri = srwm_row(spec, i), rj = srwm_row(spec, j);
    // successor pairs with probabilities
    std::vector<std::pair<double, double>> succ;  // (prob, V(x') + V(y'))
    const int di[3] = {-1, 0, 1};
    const double pi_[3] = {ri.down, ri.stay, ri.up}, pj[3] = {rj.down, rj.stay, rj.up};
    for (int a = 0; a < 3; ++a) {
      if (pi_[a] == 0) continue;
      if (i == j) {
        succ.emplace_back(pi_[a], 2 * V(i + di[a]));
        continue;
      }
      for (int b = 0; b < 3; ++b)
        if (pj[b] > 0) succ.emplace_back(pi_[a] * pj[b], V(i + di[a]) + V(j + di[b]));
    }
    const double u = V(i) + V(j);
    const bool in = delta.contains(std::abs(spec.state(i)), std::abs(spec.state(j)), lV(i), lV(j));
    rep.v0_dominated = rep.v0_dominated && kit.H_k(0, u) <= u * (1 + 1e-12);
    for (int n = 0; n <= n_max; ++n) {
      double q = 0;
      for (const auto& [p, w] : succ) q += p * kit.H_k(n + 1, w);
      const double rn = kit.r(n);
      const double rhs = kit.H_k(n, u) - rn + (in ? rep.b_seq * rn : 0.0);
      ++rep.checks;
      rep.max_violation = std::max(rep.max_violation, q - rhs);
      if (q <= rhs + 1e-9 * (1 + std::abs(rhs)))
        ++rep.holds;
      else
        ++rep.violated;
    }
  }
  rep.valid = rep.violated == 0 && rep.v0_dominated;
  return rep;
}

}  // namespace subgeo
