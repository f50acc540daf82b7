#include "subgeo/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "subgeo/error.hpp"
#include "subgeo/numerics.hpp"

namespace subgeo {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError("bounds", what);
}

double lse(std::initializer_list<double> xs) {
  double m = -INFINITY;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void BoundInputs::validate() const {
  require(ell >= 1, "ell must be >= 1");
  require(epsilon >= 0 && epsilon < 1, "epsilon must lie in [0,1)");
  require(b_double >= 0 && std::isfinite(b_double), "b_double must be finite and nonnegative");
  require(sup_delta_V >= 2, "sup_delta_V must be at least 2 (V >= 1)");
  require(M_phi > 0 && std::isfinite(M_phi), "M_phi must be positive and finite");
  require(M_V >= 1, "M_V must be >= 1");
  require(V_of_x >= 1, "V(x) must be >= 1");
}

BoundConstants assemble_constants(const BoundInputs& in, const SubgeomConstants& sc, const RateKit& kit) {
  in.validate();
  BoundConstants k;
  const double r0 = kit.r(0);
  const double R_ell = kit.R(in.ell - 1);
  k.b_seq = sc.step_ratio * in.b_double / r0;
  k.a1 = sc.c1 * sc.c2 * R_ell;
  k.a2 = k.a1 * k.b_seq * r0;
  k.C_Delta = sc.c1 * sc.c2 * R_ell * (in.sup_delta_V + in.ell * in.b_double + k.b_seq * r0);
  k.a3 = sc.c3 * sc.c4 * k.C_Delta;
  k.b1 = sc.c5 * k.C_Delta;
  for (double v : {k.a1, k.a3, k.b1, k.C_Delta})
    if (!(v > 0) || !std::isfinite(v)) throw CertificationError("bounds", "assembled constant is not finite and positive");
  return k;
}

BoundTermsI eval_bound_i(const BoundConstants& k, const BoundInputs& in, const RateKit& kit, double n) {
  require(n >= 1, "bound (i) needs n >= 1");
  BoundTermsI t;
  const double num1 = k.a1 * (in.V_of_x + in.b_double * (in.ell - 1)) + k.a2 + 1;
  const double l1 = std::log(num1) - kit.log_Hinv(n / 2);
  const double l2 = std::log(2 * in.M_phi * (k.a1 + 1)) - kit.phi().log_eval_log(kit.log_R(n / 2));
  // v_n = R(-n log(1-eps) / (2 (log R(n) - log(1-eps))))
  const double nl = -std::log1p(-in.epsilon);
  const double arg = nl > 0 ? n * nl / (2 * (kit.log_R(n) + nl)) : 0.0;
  t.log_v_n = kit.log_R(arg);
  t.v_n = std::exp(t.log_v_n);
  const double l3 = std::log(k.a3) - t.log_v_n;
  t.term1 = std::exp(l1);
  t.term2 = std::exp(l2);
  t.term3 = std::exp(l3);
  t.log_raw_total = lse({l1, l2, l3});
  t.raw_total = std::exp(t.log_raw_total);
  t.total = std::min(1.0, t.raw_total);
  return t;
}

BoundTermsII eval_bound_ii(const BoundConstants& k, const BoundInputs& in, const RateKit& kit,
                           const SubgeomConstants& sc, double n, double delta) {
  require(n >= 1, "bound (ii) needs n >= 1");
  require(delta > 0 && delta < 1, "delta must lie in (0,1)");
  BoundTermsII t;
  t.kappa = std::expm1(-(1 - delta) / delta * std::log1p(-in.epsilon)) / k.b1;
  if (!(t.kappa > 0)) {
    // epsilon = 0: no contraction, nothing to say
    t.total = 1;
    t.raw_total = INFINITY;
    t.log_raw_total = INFINITY;
    return t;
  }
  double Mk = -1;
  for (const auto& [kk, m] : sc.Mkappa)
    if (kk == t.kappa) Mk = m;
  if (Mk < 0) Mk = compute_mkappa(kit, t.kappa, sc.grid_horizon);
  t.M_kappa = Mk;
  const double f = 1 + k.b1 * t.kappa;
  const double num1 = 1 + f * (kit.r(Mk) / t.kappa + k.a1 * (in.V_of_x + in.b_double * (in.ell - 1)) + k.a2);
  const double lR = delta * kit.log_R(n);
  const double l1 = std::log(num1) - lR;
  const double l2 = std::log(2 * in.M_phi * (f * k.a1 + 1)) - kit.phi().log_eval_log(lR);
  t.log_raw_total = lse({l1, l2});
  t.raw_total = std::exp(t.log_raw_total);
  t.total = std::min(1.0, t.raw_total);
  return t;
}

long n_min_valid(const RateKit& kit, double M_V) {
  if (kit.R(0) >= M_V) return 0;
  // R is increasing: double, then bisect on integers. The comparison forgives
  // rounding in log R so that exact hits (R(n/2) == M_V) count.
  const double target = std::log(M_V) - 1e-12 * (1 + std::log(M_V));
  long hi = 1;
  while (kit.log_R(hi / 2.0) < target) {
    hi *= 2;
    if (hi > (1L << 60)) throw ConvergenceError("bounds", "R(n/2) never reaches M_V");
  }
  long lo = hi / 2;
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    if (kit.log_R(mid / 2.0) >= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

BoundReport bound_report(const BoundInputs& in, const SubgeomConstants& sc, const RateKit& kit,
                         const std::vector<long>& ns, double delta) {
  BoundReport rep;
  rep.constants = assemble_constants(in, sc, kit);
  rep.delta = delta;
  rep.n_min = n_min_valid(kit, in.M_V);
  rep.notes = "constant b2 in the delta-bound read as a2";
  // kappa and M_kappa do not depend on n: resolve them once
  SubgeomConstants local = sc;
  bool ii_vacuous = false;
  const double kappa = std::expm1(-(1 - delta) / delta * std::log1p(-in.epsilon)) / rep.constants.b1;
  if (kappa > 0 && !ns.empty()) {
    try {
      local.Mkappa.emplace_back(kappa, compute_mkappa(kit, kappa, sc.grid_horizon));
    } catch (const CertificationError& e) {
      ii_vacuous = true;  // M_kappa beyond the certified grid: bound (ii) says nothing
      rep.notes += "; bound (ii) vacuous: " + std::string(e.what());
    }
  }
  for (long n : ns) {
    BoundRow row;
    row.n = n;
    row.i = eval_bound_i(rep.constants, in, kit, static_cast<double>(n));
    row.total_ii = ii_vacuous ? 1.0 : eval_bound_ii(rep.constants, in, kit, local, static_cast<double>(n), delta).total;
    row.applicable = n >= rep.n_min;
    rep.rows.push_back(row);
  }
  return rep;
}

SoundnessRecord validate_bound(const BoundReport& report, const std::vector<double>& truth,
                               const std::vector<double>& slack) {
  require(truth.size() == report.rows.size(), "truth must have one entry per report row");
  require(slack.empty() || slack.size() == truth.size(), "slack must match truth");
  SoundnessRecord s;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const auto& row = report.rows[k];
    s.ratio.push_back(truth[k] > 0 ? row.i.total / truth[k] : INFINITY);
    if (!row.applicable) continue;
    ++s.checked;
    const double sl = slack.empty() ? 0.0 : slack[k];
    if (row.i.total < truth[k] - sl) {
      s.sound = false;
      if (!s.first_violation) s.first_violation = row.n;
    }
  }
  return s;
}

double tail_bound(const BoundConstants& k, const RateKit& kit, double q_ell_bound, int m, double n) {
  const double first = std::exp(std::log(k.a1 * q_ell_bound + k.a2) - kit.log_R(n / 2));
  if (m == 0) return first;  // R(n/(2m)) = R(inf)
  return first + std::exp(std::log(k.a3) - kit.log_R(n / (2.0 * m)));
}

TailCheckReport tail_bound_check(const ProductChainResult& exact, const BoundConstants& k, const BoundInputs& in,
                                 const RateKit& kit, double V_pair_sum, const std::vector<int>& m_list,
                                 const std::vector<long>& n_list) {
  TailCheckReport rep;
  const double v0 = kit.H_k(0, V_pair_sum);
  rep.q_ell_bound = std::min(v0 + (in.ell - 1) * k.b_seq * kit.r(0), V_pair_sum + (in.ell - 1) * in.b_double);
  for (int m : m_list) {
    require(m >= 0 && static_cast<std::size_t>(m) < exact.tail.size(), "m outside the exact tail table");
    for (long n : n_list) {
      require(n >= 0 && static_cast<std::size_t>(n) < exact.tail[m].size(), "n outside the exact tail table");
      const double b = tail_bound(k, kit, rep.q_ell_bound, m, static_cast<double>(n));
      const double e = exact.tail[m][n];
      ++rep.checks;
      rep.max_ratio = std::max(rep.max_ratio, e / b);
      if (e > b) {
        ++rep.violations;
        if (!rep.first_violation) rep.first_violation = {m, n};
      }
    }
  }
  return rep;
}

}  // namespace subgeo
