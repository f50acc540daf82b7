// Acceptance suite: one PASS/FAIL line per criterion. Exit status 1 if any fails.
// Usage: acceptance [output-dir]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "subgeo/chains.hpp"
#include "subgeo/config.hpp"
#include "subgeo/coupling.hpp"
#include "subgeo/drift.hpp"
#include "subgeo/error.hpp"
#include "subgeo/experiments.hpp"
#include "subgeo/numerics.hpp"
#include "subgeo/rates.hpp"

using namespace subgeo;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "NOT ") + what;
  }
};

int n_failed = 0;

void report(int id, const std::string& title, const std::function<Verdict()>& body) {
  Verdict v;
  const auto t0 = Clock::now();
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  if (!v.pass) ++n_failed;
  std::printf("%s  criterion %2d  %s  (%.2fs)  %s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), seconds_since(t0),
              v.detail.c_str());
  std::fflush(stdout);
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// results["a"]["b"]["value"] from "a.b"
json field(const json& j, const std::string& dotted) {
  const json* cur = &j;
  std::stringstream ss(dotted);
  std::string key;
  while (std::getline(ss, key, '.')) cur = &cur->at(key);
  if (cur->is_object() && cur->contains("value")) return cur->at("value");
  return *cur;
}

double dnum(const json& j, const std::string& dotted) {
  const json v = field(j, dotted);
  if (v.is_string()) return std::stod(v.get<std::string>());
  return v.get<double>();
}

bool assertion(const ExperimentResult& r, const std::string& name) {
  for (const auto& a : r.assertions)
    if (a.name == name) return a.passed;
  throw std::runtime_error("no assertion named '" + name + "'");
}

// Pipeline runs shared between criteria, keyed by experiment.
struct Runs {
  fs::path dir;
  std::map<ExperimentKind, ExperimentResult> single;
  std::map<ExperimentKind, double> seconds;

  const ExperimentResult& get(ExperimentKind k, const std::string& tag) {
    auto it = single.find(k);
    if (it != single.end()) return it->second;
    ExperimentConfig cfg = default_config(k);
    cfg.output = (dir / (tag + "_t1")).string();
    cfg.threads = 1;
    const auto t0 = Clock::now();
    auto res = run_experiment(cfg);
    seconds[k] = seconds_since(t0);
    return single.emplace(k, std::move(res)).first->second;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

std::vector<ConcaveRate> families() {
  return {ConcaveRate::logarithmic(2.0), ConcaveRate::polynomial(0.5), ConcaveRate::subexponential(1.0),
          ConcaveRate::pcn_drift(0.5, 0.0125, 0.5)};
}

}  // namespace

int main(int argc, char** argv) {
  Runs runs;
  runs.dir = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::create_directories(runs.dir);

  report(1, "rate calculus exactness", [] {
    Verdict v;
    const auto t0 = Clock::now();
    for (bool closed : {true, false}) {
      const auto kit = build_rate_kit(ConcaveRate::polynomial(0.5), 1e-10, 1e-12, closed);
      const std::string tag = closed ? " closed" : " quadrature";
      const double h4 = kit.H(4.0), hi2 = kit.Hinv(2.0);
      v.require(std::abs(h4 - 2) < 1e-10, "|H(4)-2|=" + num(std::abs(h4 - 2)) + tag);
      v.require(std::abs(hi2 - 4) < 1e-8, "|Hinv(2)-4|=" + num(std::abs(hi2 - 4)) + tag);
    }
    const auto exact = build_rate_kit(ConcaveRate::subexponential(1.0));
    const auto quad = build_rate_kit(ConcaveRate::subexponential(1.0), 1e-10, 1e-12, false);
    double worst = 0;
    for (double t : numerics::log_space(1, 1e6, 400)) {
      const double a = exact.H(t), b = quad.H(t);
      const double err = a == 0 ? std::abs(b) : std::abs(a - b) / std::abs(a);
      worst = std::max(worst, err);
    }
    v.require(exact.closed_form_H() && !quad.closed_form_H(), "closed form vs quadrature paths");
    v.require(worst < 1e-8, "subexp quadrature rel err " + num(worst));
    const double secs = seconds_since(t0);
    v.require(secs < 1, "runtime " + num(secs) + "s < 1s");
    return v;
  });

  report(2, "R is the inverse of H", [] {
    Verdict v;
    const auto t0 = Clock::now();
    const auto ts = numerics::log_space(1e-3, 1e4, 1000);
    for (const auto& phi : families()) {
      const auto kit = build_rate_kit(phi);
      const auto Rint = kit.R_by_integration(ts);
      double worst = 0;
      for (std::size_t k = 0; k < ts.size(); ++k) worst = std::max(worst, std::abs(Rint[k] / kit.R(ts[k]) - 1));
      v.require(worst < 1e-8, phi.describe() + " rel err " + num(worst));
    }
    const double secs = seconds_since(t0);
    v.require(secs < 10, "runtime " + num(secs) + "s < 10s");
    return v;
  });

  report(3, "synthetic polynomial and subexponential rate rows", [&] {
    Verdict v;
    const auto& r = runs.get(ExperimentKind::Table1Check, "table1");
    const double ps = dnum(r.results, "polynomial.slope_log_total_i_vs_log_n");
    v.require(ps >= -1.1 && ps <= -0.9, "polynomial slope " + num(ps) + " in [-1.1,-0.9]");
    const double ss = dnum(r.results, "subexponential.slope_log_total_ii_vs_n_pow");
    const double target = -0.9 * std::pow(2.0, 0.5);
    v.require(std::abs(ss - target) <= 0.1 * std::abs(target), "subexp slope " + num(ss) + " vs " + num(target));
    return v;
  });

  report(4, "SRWM drift calibration (K=2000)", [&] {
    Verdict v;
    const auto& r = runs.get(ExperimentKind::SrwmFull, "srwm");
    const double c = dnum(r.results, "drift.c"), b = dnum(r.results, "drift.b");
    v.require(c > 0 && std::isfinite(b), "c=" + num(c) + " b=" + num(b));
    v.require(field(r.results, "drift.valid").get<bool>() && dnum(r.results, "drift.points") == 4001,
              "exact certificate on all 4001 lattice points");
    LatticeSpec L{0.4, 2000};
    const double s = 2.2, x = 125;
    const double inc = srwm_drift_increment(L, L.index(x), s);
    const double asym = std::pow(x, s - 2) * s * (s - L.h - 2) / 48;
    v.require(std::abs(inc / asym - 1) <= 0.1, "PV-V at 125 = " + num(inc) + " vs " + num(asym));
    v.require(runs.seconds[ExperimentKind::SrwmFull] < 30, "pipeline " + num(runs.seconds[ExperimentKind::SrwmFull]) + "s");
    return v;
  });

  report(5, "SRWM coupling set ProductBall(1/2), ell=2", [] {
    Verdict v;
    LatticeSpec L{0.4, 100};
    const CouplingSet ball{DeltaKind::ProductBall, 0.5};
    const double exact = lattice_epsilon_exact(L, ball, 2);
    v.require(exact >= 1.0 / 81, "exact eps " + num(exact) + " >= 1/81");
    const auto rows = srwm_rows(L);
    std::vector<std::pair<int, int>> pairs;
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b)
        if (a != b) pairs.emplace_back(L.index(a / 4.0), L.index(b / 4.0));
    auto step = [&rows](int x, int y, Rng& rng) { return couple_srwm(rows, {x, y}, rng); };
    auto chk = verify_coupling_set<int>(step, [](int a, int b) { return std::abs(a - b) * 0.25; }, MetricSpec{},
                                        2, pairs, pairs, 100000, 2024, 0.975, 1);
    v.require(chk.epsilon_lower <= exact && exact <= chk.epsilon_upper,
              "MC [" + num(chk.epsilon_lower) + ", " + num(chk.epsilon_upper) + "] covers exact");
    return v;
  });

  report(6, "coupling inequality and supermartingale (K=100)", [&] {
    Verdict v;
    const auto& r = runs.get(ExperimentKind::TailCheck, "tail");
    const auto cfg = default_config(ExperimentKind::TailCheck);
    v.require(cfg.lattice.K == 100 && cfg.tail.n_max_prop >= 500 && cfg.tail.m_max_prop >= 10, "K=100, n<=500, m<=10");
    v.require(dnum(r.results, "coupling_inequality.violations") == 0,
              "violations " + num(dnum(r.results, "coupling_inequality.violations")) + " of " +
                  num(dnum(r.results, "coupling_inequality.checks")));
    v.require(dnum(r.results, "coupling_inequality.supermartingale_violations") == 0, "E d0 nonincreasing");
    return v;
  });

  report(7, "tail bound on P[T_m >= n] (K=100)", [&] {
    Verdict v;
    const auto& r = runs.get(ExperimentKind::TailCheck, "tail");
    const auto cfg = default_config(ExperimentKind::TailCheck);
    v.require(cfg.tail.m_max_tail >= 5 && cfg.tail.n_max_tail >= 400, "m in 0..5, n in ell..400");
    v.require(dnum(r.results, "tail_bound.violations") == 0,
              "violations " + num(dnum(r.results, "tail_bound.violations")) + " of " +
                  num(dnum(r.results, "tail_bound.checks")));
    return v;
  });

  report(8, "SRWM end-to-end soundness", [&] {
    Verdict v;
    const auto& r = runs.get(ExperimentKind::SrwmFull, "srwm");
    v.require(field(r.results, "validation.soundness").get<bool>(),
              "bound (i) >= exact TV on " + num(dnum(r.results, "validation.checked")) + " n in [n_min_valid, 1e4]");
    v.require(field(r.results, "validation.tv_n015_bounded").get<bool>(),
              "TV n^0.15 max " + num(dnum(r.results, "validation.max_tv_n015_1e3_1e4")) + " on [1e3,1e4] <= " +
                  num(dnum(r.results, "validation.max_tv_n015_1e2_1e3")) + " on [1e2,1e3]");
    v.require(runs.seconds[ExperimentKind::SrwmFull] < 300, "runtime < 5 min");
    return v;
  });

  report(9, "AR synchronous coupling and decay", [&] {
    Verdict v;
    const auto& r = runs.get(ExperimentKind::ArFull, "ar");
    const auto cfg = default_config(ExperimentKind::ArFull);
    const double cm = dnum(r.results, "coupling.C_M_contraction_radius");
    v.require(cfg.ar_lipschitz_pairs >= 10000 && cm < 1,
              "C_M=" + num(cm) + " on B(0," + num(cfg.ar_contraction_radius) + ")");
    const double g = dnum(r.results, "coupling.global_ratio_max");
    v.require(g <= 1 + 1e-12, "global ratio max " + num(g) + " <= 1+1e-12");
    const double r2 = dnum(r.results, "empirical.fit.r_squared");
    v.require(r2 > 0.9, "R^2 " + num(r2) + " for log E d vs n^(1/3)");
    return v;
  });

  report(10, "pCN drift, contraction and coupling set", [&] {
    Verdict v;
    const auto& r = runs.get(ExperimentKind::PcnFull, "pcn");
    v.require(field(r.results, "drift.valid").get<bool>() && field(r.results, "drift.revalidation_valid").get<bool>(),
              "PcnDrift certificate c=" + num(dnum(r.results, "drift.c")) + " b=" + num(dnum(r.results, "drift.b")));
    v.require(assertion(r, "both-accept steps contract d_eta by rho^beta") &&
                  dnum(r.results, "empirical.both_accept_steps_audited") > 0,
              num(dnum(r.results, "empirical.both_accept_steps_audited")) + " both-accept steps at rho^beta");
    const double el = dnum(r.results, "coupling.epsilon_lower");
    v.require(field(r.results, "coupling.found").get<bool>() && el > 0 &&
                  std::abs(dnum(r.results, "coupling.level") - std::exp(1.0)) < 1e-15,
              "u=e: ell=" + num(dnum(r.results, "coupling.ell")) + " eps_lower=" + num(el));
    return v;
  });

  report(11, "single to double drift", [&] {
    Verdict v;
    for (auto [k, tag] : {std::pair{ExperimentKind::SrwmFull, "srwm"}, std::pair{ExperimentKind::PcnFull, "pcn"}}) {
      const auto& r = runs.get(k, tag);
      const double c = dnum(r.results, "drift.double.c");
      v.require(c > 0 && c < 1 && field(r.results, "drift.double.valid").get<bool>(),
                std::string(tag) + " c=" + num(c) + " double drift valid");
    }
    DriftCertificate cert{ConcaveRate::polynomial(0.5)};
    cert.b = 1;
    cert.valid = true;
    const double c = single_to_double(cert, 16).c;
    v.require(c == 0.5, "sqrt(t), b=1, upsilon=16 gives c=" + num(c));
    return v;
  });

  report(12, "concave extension", [] {
    Verdict v;
    const double eps = std::numeric_limits<double>::epsilon();
    const std::vector<ConcaveRate> bases = {ConcaveRate::logarithmic(1.5), ConcaveRate::polynomial(0.5),
                                            ConcaveRate::subexponential(0.5),
                                            ConcaveRate::pcn_drift(0.5, 0.0125, 0.5)};
    for (const auto& base : bases)
      for (double M : {2.0, 4.0, 10.0}) {
        const auto ext = extend_concave(base, M);
        const std::string tag = base.describe() + " M=" + num(M);
        const double left = M * (1 - 1e-13);
        const double dv = std::abs(ext.eval(left) - base.eval(M));
        const double dd = std::abs(ext.deriv(left) - base.deriv(M));
        bool ok = ext.eval(0.0) == 0.0 && dv < 1e-9 && dd < 1e-9;
        const int steps = 4000;
        const double h = 2 * M / steps;
        double worst = -INFINITY;
        for (int i = 1; i < steps; ++i) {
          const double t = i * h;
          const double a = ext.eval(t - h), b = ext.eval(t), c = ext.eval(t + h);
          // second difference against the rounding in the three evaluations
          const double d2 = a - 2 * b + c;
          worst = std::max(worst, d2);
          if (d2 > 8 * eps * (std::abs(a) + 2 * std::abs(b) + std::abs(c))) ok = false;
        }
        if (!ok)
          v.require(false, tag + ": |dv|=" + num(dv) + " |dphi'|=" + num(dd) + " max d2=" + num(worst));
      }
    if (v.pass) v.detail = "4 families x M in {2,4,10}";
    return v;
  });

  report(13, "determinism across thread counts", [&] {
    Verdict v;
    const std::vector<std::pair<ExperimentKind, std::string>> all = {
        {ExperimentKind::RateTables, "rates"}, {ExperimentKind::Table1Check, "table1"},
        {ExperimentKind::SrwmFull, "srwm"},    {ExperimentKind::TailCheck, "tail"},
        {ExperimentKind::ArFull, "ar"},        {ExperimentKind::PcnFull, "pcn"}};
    int compared = 0;
    for (const auto& [k, tag] : all) {
      const auto& one = runs.get(k, tag);
      ExperimentConfig cfg = default_config(k);
      cfg.output = (runs.dir / (tag + "_t3")).string();
      cfg.threads = 3;
      const auto three = run_experiment(cfg);
      for (std::size_t f = 0; f < one.files.size(); ++f) {
        if (fs::path(one.files[f]).extension() != ".csv") continue;
        ++compared;
        const bool same = f < three.files.size() && slurp(one.files[f]) == slurp(three.files[f]);
        if (!same) v.require(false, tag + ": " + fs::path(one.files[f]).filename().string() + " differs");
      }
    }
    v.require(compared > 0, num(compared) + " CSV files byte-identical at 1 vs 3 threads");
    return v;
  });

  std::printf("%d criteria failed\n", n_failed);
  return n_failed == 0 ? 0 : 1;
}
