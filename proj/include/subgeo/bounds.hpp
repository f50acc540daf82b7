#pragma once

#include <optional>
#include <string>
#include <vector>

#include "subgeo/coupling.hpp"
#include "subgeo/rates.hpp"

namespace subgeo {

struct BoundInputs {
  int ell = 1;
  double epsilon = 0;      // certified lower bound; 0 makes the third term vacuous
  double b_double = 0;
  double sup_delta_V = 0;  // sup over Delta of V(x) + V(y)
  double M_phi = 0;        // bound on pi(phi o V)
  double M_V = 1;          // pi(V <= M_V) >= 1/2
  double V_of_x = 1;
  void validate() const;
};

struct BoundConstants {
  double a1 = 0, a2 = 0, a3 = 0, b1 = 0, C_Delta = 0, b_seq = 0;
};

/// a1 = c1 c2 R(ell-1), a2 = a1 b_seq r(0), a3 = c3 c4 C_Delta, b1 = c5 C_Delta,
/// C_Delta = c1 c2 R(ell-1) (sup_delta_V + ell b_double + b_seq r(0)),
/// b_seq = step_ratio b_double / r(0).
BoundConstants assemble_constants(const BoundInputs& in, const SubgeomConstants& sc, const RateKit& kit);

struct BoundTermsI {
  double term1 = 0, term2 = 0, term3 = 0;
  double total = 0;      // capped at 1
  double raw_total = 0;  // uncapped
  double log_raw_total = 0;
  double v_n = 0;
  double log_v_n = 0;
};

/// Evaluated in log space; R and phi o R may exceed the double range.
BoundTermsI eval_bound_i(const BoundConstants& k, const BoundInputs& in, const RateKit& kit, double n);

struct BoundTermsII {
  double kappa = 0;
  double M_kappa = 0;
  double total = 0;
  double raw_total = 0;
  double log_raw_total = 0;
};

/// kappa = ((1-eps)^{-(1-delta)/delta} - 1)/b1; M_kappa from the constants
/// (computed on demand when not listed).
BoundTermsII eval_bound_ii(const BoundConstants& k, const BoundInputs& in, const RateKit& kit,
                           const SubgeomConstants& sc, double n, double delta);

/// First n with R(n/2) >= M_V.
long n_min_valid(const RateKit& kit, double M_V);

struct BoundRow {
  long n = 0;
  BoundTermsI i;
  double total_ii = 1;
  bool applicable = false;  // n >= n_min_valid
};

struct BoundReport {
  BoundConstants constants;
  double delta = 0.5;
  long n_min = 0;
  std::vector<BoundRow> rows;
  std::string notes;
};

BoundReport bound_report(const BoundInputs& in, const SubgeomConstants& sc, const RateKit& kit,
                         const std::vector<long>& ns, double delta);

struct SoundnessRecord {
  bool sound = true;
  long checked = 0;
  std::optional<long> first_violation;
  std::vector<double> ratio;  // bound / truth where truth > 0
};

/// total_i(n) >= truth(n) - slack(n) for every applicable row; truth and
/// slack are indexed like report.rows.
SoundnessRecord validate_bound(const BoundReport& report, const std::vector<double>& truth,
                               const std::vector<double>& slack = {});

struct TailCheckReport {
  long checks = 0, violations = 0;
  std::optional<std::pair<int, long>> first_violation;  // (m, n)
  double max_ratio = 0;                                 // exact / bound
  double q_ell_bound = 0;                               // bound used for Q^{ell-1} V_0
};

/// Renewal tail bound
///   P[T_m >= n] <= (a1 Q^{ell-1} V_0(x,y) + a2)/R(n/2) + a3/R(n/(2m))
/// with Q^{ell-1} V_0 <= min(V_0 + (ell-1) b_seq r(0), V(x)+V(y) + (ell-1) b_double).
TailCheckReport tail_bound_check(const ProductChainResult& exact, const BoundConstants& k, const BoundInputs& in,
                                 const RateKit& kit, double V_pair_sum, const std::vector<int>& m_list,
                                 const std::vector<long>& n_list);
double tail_bound(const BoundConstants& k, const RateKit& kit, double q_ell_bound, int m, double n);

}  // namespace subgeo
