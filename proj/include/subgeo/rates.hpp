#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace subgeo {

enum class RateFamily { Logarithmic, Polynomial, Subexponential, PcnDrift, Extended };

std::string to_string(RateFamily f);

/// A concave increasing rate function phi. Immutable; cheap to copy.
///
///   Logarithmic     (1 + log t)^kappa
///   Polynomial      t^kappa
///   Subexponential  t / (1 + log t)^kappa
///   PcnDrift        c t exp(-(log t / kappa)^(beta/2)), continued below the
///                   point where it stops being concave
///   Extended        base on [M, inf), a t + b sqrt(t) on [0, M)
///
/// Every family carries a positive multiplier `scale`.
class ConcaveRate {
 public:
  static ConcaveRate logarithmic(double kappa, double scale = 1.0);
  static ConcaveRate polynomial(double kappa, double scale = 1.0);
  static ConcaveRate subexponential(double kappa, double scale = 1.0);
  static ConcaveRate pcn_drift(double c, double kappa, double beta, double scale = 1.0);

  RateFamily family() const { return family_; }
  double kappa() const { return kappa_; }
  double scale() const { return scale_; }
  double pcn_c() const { return c_; }
  double pcn_beta() const { return beta_; }
  /// Point below which the linear + sqrt continuation is used (0 if none).
  double join_point() const { return has_ext_ ? ext_M_ : 0.0; }
  const ConcaveRate* base() const { return base_.get(); }

  /// Copy with the multiplier changed by `factor`.
  ConcaveRate scaled(double factor) const;

  double eval(double t) const;
  double deriv(double t) const;
  /// log phi(e^L), finite for arguments far beyond the double range of t.
  double log_eval_log(double L) const;
  /// Smallest admissible argument: 0 when phi(0) = 0 is defined, else 1.
  double lower_domain() const;
  bool zero_at_origin() const { return lower_domain() == 0.0; }
  /// phi^{-1}(y) by bisection on [lower_domain, inf).
  double inverse(double y) const;

  std::string describe() const;

 private:
  friend ConcaveRate extend_concave(const ConcaveRate& phi, double M);
  ConcaveRate() = default;
  double raw(double t) const;
  double raw_deriv(double t) const;
  double raw_log_log(double L) const;

  RateFamily family_ = RateFamily::Polynomial;
  double kappa_ = 0.5;
  double scale_ = 1.0;
  double c_ = 1.0;
  double beta_ = 1.0;
  std::shared_ptr<const ConcaveRate> base_;
  bool has_ext_ = false;
  double ext_M_ = 0.0, ext_a_ = 0.0, ext_b_ = 0.0;
};

/// Concave C^1 continuation of phi below M with value 0 at the origin.
/// Throws DomainError when phi'(M) <= 0 or phi(M) < M phi'(M).
ConcaveRate extend_concave(const ConcaveRate& phi, double M);

double phi_eval(const ConcaveRate& phi, double t);

/// H, its inverse R, r = phi o R and the H_k maps for one rate function.
/// When no closed form exists H is tabulated once on a log grid by adaptive
/// quadrature and refined locally; the inverse runs Newton from the left,
/// which is monotone because H is concave.
class RateKit {
 public:
  RateKit(ConcaveRate phi, double quad_tol, double inv_tol, bool allow_closed_form);

  const ConcaveRate& phi() const { return phi_; }
  bool closed_form_H() const { return closed_; }
  bool closed_form_Hinv() const { return closed_; }

  double H(double t) const;
  double Hinv(double u) const;
  double log_Hinv(double u) const;
  double R(double t) const { return Hinv(t); }
  double log_R(double t) const { return log_Hinv(t); }
  double r(double t) const;
  double log_r(double t) const;
  /// Hinv(H(u) + k) - Hinv(k).
  double H_k(double k, double u) const;

  /// 1 + int_0^t r over an increasing list of t, integrated piecewise.
  std::vector<double> R_by_integration(const std::vector<double>& ts) const;

 private:
  double H_from_node(std::size_t i, double t) const;
  double log_Hinv_table(double u) const;
  double segment(double t0, double t1) const;

  ConcaveRate phi_;
  double quad_tol_;
  double inv_tol_;
  bool closed_ = false;
  std::vector<double> node_t_;  // log-grid nodes (t values)
  std::vector<double> node_H_;  // H at the nodes
};

RateKit build_rate_kit(const ConcaveRate& phi, double quad_tol = 1e-10, double inv_tol = 1e-12,
                       bool allow_closed_form = true);

double r_phi(const RateKit& kit, double t);
double H_k(const RateKit& kit, double k, double u);

struct SubgeomConstants {
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0;
  std::string r0_spec = "r0(t) = max(2, r(t))";
  double r0_at_1 = 0;
  /// sup over integer p of r(p+1)/r(p) on the grid, and its final value
  /// min(grid sup, c4 * r0(1)).
  double step_ratio_grid = 0;
  double step_ratio = 0;
  std::vector<std::pair<double, double>> Mkappa;  // (kappa, M_kappa)
  double grid_horizon = 0;
  std::size_t grid_size = 0;
  std::string tail_justification;

  double Mkappa_for(double kappa) const;
};

/// M_kappa: a point past which r(t) <= kappa R(t) on the grid up to horizon.
double compute_mkappa(const RateKit& kit, double kappa, double horizon);

/// Grid certification of the subgeometric constants. The horizon must cover
/// at least 10^3 evaluation points; throws CertificationError when a profile
/// is still increasing near the horizon.
SubgeomConstants subgeom_constants(const RateKit& kit, int ell, double grid_horizon,
                                   const std::vector<double>& kappa_list);

/// Evaluation grid used by the constants: integers 0..64, then log-spaced.
std::vector<double> constants_grid(double horizon, std::size_t log_points = 400);

}  // namespace subgeo
