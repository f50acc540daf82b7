#include "subgeo/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "subgeo/error.hpp"

namespace subgeo {

using nlohmann::json;

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::RateTables: return "RateTables";
    case ExperimentKind::Table1Check: return "Table1Check";
    case ExperimentKind::SrwmFull: return "SrwmFull";
    case ExperimentKind::ArFull: return "ArFull";
    case ExperimentKind::PcnFull: return "PcnFull";
    case ExperimentKind::TailCheck: return "TailCheck";
  }
  return "?";
}

ExperimentKind experiment_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::RateTables, ExperimentKind::Table1Check, ExperimentKind::SrwmFull,
                 ExperimentKind::ArFull, ExperimentKind::PcnFull, ExperimentKind::TailCheck})
    if (s == to_string(k)) return k;
  throw ConfigError("experiment", "experiment: unknown experiment '" + s + "'");
}

namespace {

const char* family_name(RateFamily f) {
  switch (f) {
    case RateFamily::Logarithmic: return "Logarithmic";
    case RateFamily::Polynomial: return "Polynomial";
    case RateFamily::Subexponential: return "Subexponential";
    case RateFamily::PcnDrift: return "PcnDrift";
    case RateFamily::Extended: return "Extended";
  }
  return "?";
}

RateFamily family_from_string(const std::string& s, const std::string& field) {
  for (auto f : {RateFamily::Logarithmic, RateFamily::Polynomial, RateFamily::Subexponential, RateFamily::PcnDrift})
    if (s == family_name(f)) return f;
  throw ConfigError(field, field + ": unknown rate family '" + s + "'");
}

const char* delta_name(DeltaKind k) {
  switch (k) {
    case DeltaKind::ProductBall: return "ProductBall";
    case DeltaKind::LevelSet: return "LevelSet";
    case DeltaKind::SublevelSquare: return "SublevelSquare";
  }
  return "?";
}

// One JSON object of the schema: typed reads, and a final sweep that
// rejects whatever was not read.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, (path_.empty() ? "<root>" : path_) + ": expected an object");
  }
  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }
  void num(const char* key, double& out) {
    if (auto* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), field(key) + ": expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(field(key), field(key) + ": must be finite");
    }
  }
  template <class I>
  void integer(const char* key, I& out) {
    if (auto* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), field(key) + ": expected an integer");
      out = v->get<I>();
    }
  }
  void boolean(const char* key, bool& out) {
    if (auto* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), field(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }
  bool str(const char* key, std::string& out) {
    if (auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), field(key) + ": expected a string");
      out = v->get<std::string>();
      return true;
    }
    return false;
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key().c_str()), field(it.key().c_str()) + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, field + ": " + what);
}

void parse_rate(const json& j, RateConfig& r) {
  Obj o(j, "rate");
  std::string fam;
  if (o.str("family", fam)) r.family = family_from_string(fam, "rate.family");
  o.num("kappa", r.kappa);
  o.num("scale", r.scale);
  o.num("c", r.c);
  o.num("beta", r.beta);
  o.num("extend_at", r.extend_at);
  o.num("grid_horizon", r.grid_horizon);
  o.num("quad_tol", r.quad_tol);
  o.num("inv_tol", r.inv_tol);
  o.num("t_max", r.t_max);
  o.integer("points", r.points);
  o.finish();
}

void parse_lattice(const json& j, ExperimentConfig& c) {
  Obj o(j, "lattice");
  o.num("h", c.lattice.h);
  o.integer("K", c.lattice.K);
  o.num("s_exponent", c.s_exponent);
  o.finish();
}

void parse_ar(const json& j, ExperimentConfig& c) {
  Obj o(j, "ar");
  o.integer("p", c.ar.p);
  o.num("rho_ar", c.ar.rho_ar);
  std::string noise;
  if (o.str("noise", noise)) {
    if (noise == "Gaussian")
      c.ar.noise = NoiseKind::Gaussian;
    else if (noise == "TruncatedExp")
      c.ar.noise = NoiseKind::TruncatedExp;
    else
      throw ConfigError("ar.noise", "ar.noise: expected Gaussian or TruncatedExp");
  }
  o.num("sigma", c.ar.sigma);
  o.num("beta0", c.ar.beta0);
  o.num("kappa0", c.ar.kappa0);
  o.num("beta", c.ar.beta);
  o.num("contraction_radius", c.ar_contraction_radius);
  o.integer("lipschitz_pairs", c.ar_lipschitz_pairs);
  o.finish();
}

void parse_pcn(const json& j, ExperimentConfig& c) {
  Obj o(j, "pcn");
  o.integer("p", c.pcn.p);
  o.num("rho_pcn", c.pcn.rho);
  o.num("beta", c.pcn.beta);
  o.num("Cg", c.pcn.Cg);
  o.num("theta", c.pcn.theta);
  check(c.pcn.p >= 1 && c.pcn.p <= 100000, "pcn.p", "must lie in [1, 1e5]");
  c.pcn.eigs = PcnSpec::inverse_square_eigs(c.pcn.p);
  if (auto* e = o.find("eigs")) {
    check(e->is_array() && e->size() == static_cast<std::size_t>(c.pcn.p), "pcn.eigs",
          "expected an array of p positive numbers");
    for (std::size_t i = 0; i < e->size(); ++i) {
      check((*e)[i].is_number() && (*e)[i].get<double>() > 0, "pcn.eigs", "entries must be positive numbers");
      c.pcn.eigs[static_cast<Eigen::Index>(i)] = (*e)[i].get<double>();
    }
  }
  o.finish();
}

void parse_coupling(const json& j, CouplingConfig& cc) {
  Obj o(j, "coupling");
  if (auto* d = o.find("delta")) {
    Obj od(*d, "coupling.delta");
    std::string kind;
    if (od.str("kind", kind)) {
      cc.delta_from_drift = kind == "FromDrift";
      if (kind == "ProductBall")
        cc.delta.kind = DeltaKind::ProductBall;
      else if (kind == "LevelSet")
        cc.delta.kind = DeltaKind::LevelSet;
      else if (kind == "SublevelSquare")
        cc.delta.kind = DeltaKind::SublevelSquare;
      else if (kind != "FromDrift")
        throw ConfigError("coupling.delta.kind",
                          "coupling.delta.kind: expected ProductBall, LevelSet, SublevelSquare or FromDrift");
    }
    od.num("threshold", cc.delta.threshold);
    od.finish();
  }
  o.integer("ell", cc.ell);
  o.integer("ell_max", cc.ell_max);
  if (auto* m = o.find("metric")) {
    Obj om(*m, "coupling.metric");
    std::string kind;
    if (om.str("kind", kind)) {
      if (kind == "Trivial")
        cc.metric.kind = MetricKind::Trivial;
      else if (kind == "Eta")
        cc.metric.kind = MetricKind::Eta;
      else
        throw ConfigError("coupling.metric.kind", "coupling.metric.kind: expected Trivial or Eta");
    }
    om.num("eta", cc.metric.eta);
    om.num("beta", cc.metric.beta);
    om.finish();
  }
  o.integer("replicates", cc.replicates);
  o.integer("n_steps", cc.n_steps);
  o.finish();
}

void parse_bounds(const json& j, BoundConfig& b) {
  Obj o(j, "bounds");
  if (auto* d = o.find("deltas")) {
    check(d->is_array() && !d->empty(), "bounds.deltas", "expected a nonempty array");
    b.deltas.clear();
    for (const auto& v : *d) {
      check(v.is_number(), "bounds.deltas", "entries must be numbers");
      b.deltas.push_back(v.get<double>());
    }
  }
  o.num("n_min", b.n_min);
  o.num("n_max", b.n_max);
  o.integer("n_points", b.n_points);
  o.finish();
}

void parse_drift(const json& j, DriftConfig& d) {
  Obj o(j, "drift");
  o.integer("n_reps", d.n_reps);
  o.num("confidence", d.confidence);
  o.num("c_hi", d.c_hi);
  o.num("factor", d.factor);
  o.integer("steps", d.steps);
  o.num("r_min", d.r_min);
  o.num("r_max", d.r_max);
  o.integer("n_radii", d.n_radii);
  o.integer("directions", d.directions);
  o.num("upsilon", d.upsilon);
  o.finish();
}

void parse_stationary(const json& j, StationaryConfig& s) {
  Obj o(j, "stationary");
  o.integer("burn_in", s.burn_in);
  o.integer("samples", s.samples);
  o.integer("batches", s.batches);
  o.finish();
}

void parse_table1(const json& j, Table1Config& t) {
  Obj o(j, "table1");
  o.num("log_kappa", t.log_kappa);
  o.num("poly_kappa", t.poly_kappa);
  o.num("subexp_kappa", t.subexp_kappa);
  o.num("epsilon", t.epsilon);
  o.integer("ell", t.ell);
  o.num("b_double", t.b_double);
  o.num("sup_delta_V", t.sup_delta_V);
  o.num("M_phi", t.M_phi);
  o.num("M_V", t.M_V);
  o.num("V_of_x", t.V_of_x);
  o.num("n_min", t.n_min);
  o.num("n_max", t.n_max);
  o.num("subexp_n_min", t.subexp_n_min);
  o.integer("points", t.points);
  o.finish();
}

void parse_tail(const json& j, TailConfig& t) {
  Obj o(j, "tail");
  if (auto* p = o.find("pairs")) {
    check(p->is_array() && !p->empty(), "tail.pairs", "expected a nonempty array of [x, y]");
    t.pairs.clear();
    for (const auto& e : *p) {
      check(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number(), "tail.pairs",
            "each entry must be [x, y]");
      t.pairs.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  }
  o.integer("m_max_tail", t.m_max_tail);
  o.integer("n_max_tail", t.n_max_tail);
  o.integer("m_max_prop", t.m_max_prop);
  o.integer("n_max_prop", t.n_max_prop);
  o.finish();
}

bool on_quarter_lattice(double x) { return std::floor(4 * x) == 4 * x; }

}  // namespace

ConcaveRate RateConfig::build() const {
  ConcaveRate phi = family == RateFamily::Logarithmic      ? ConcaveRate::logarithmic(kappa, scale)
                    : family == RateFamily::Polynomial     ? ConcaveRate::polynomial(kappa, scale)
                    : family == RateFamily::Subexponential ? ConcaveRate::subexponential(kappa, scale)
                                                           : ConcaveRate::pcn_drift(c, kappa, beta, scale);
  return extend_at > 0 ? extend_concave(phi, extend_at) : phi;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.pcn.eigs = PcnSpec::inverse_square_eigs(c.pcn.p);
  switch (kind) {
    case ExperimentKind::RateTables:
      c.output = "out/rates";
      break;
    case ExperimentKind::Table1Check:
      c.output = "out/table1";
      c.bounds.deltas = {0.9};
      break;
    case ExperimentKind::SrwmFull:
      c.output = "out/srwm";
      c.lattice = {0.4, 2000};
      c.coupling.metric = {MetricKind::Trivial, 1, 1};
      break;
    case ExperimentKind::TailCheck:
      c.output = "out/tail";
      c.lattice = {0.4, 100};
      c.coupling.delta_from_drift = false;
      c.coupling.delta = {DeltaKind::ProductBall, 0.5};
      c.coupling.ell = 2;
      break;
    case ExperimentKind::ArFull:
      c.output = "out/ar";
      c.start = 10;
      c.coupling.ell = 1;
      c.coupling.metric = {MetricKind::Eta, 1, 1};
      c.coupling.replicates = 2000;
      c.coupling.n_steps = 4000;
      c.bounds.n_max = 4000;
      c.drift.c_hi = 0.1;
      c.drift.r_min = 0.5;
      c.drift.r_max = 5000;
      c.drift.n_radii = 40;
      c.drift.directions = 2;
      c.stationary = {500, 100000, 50};
      break;
    case ExperimentKind::PcnFull:
      c.output = "out/pcn";
      c.start = 3;
      c.coupling.delta_from_drift = false;
      c.coupling.delta = {DeltaKind::SublevelSquare, std::exp(1.0)};
      c.coupling.ell = 1;
      c.coupling.metric = {MetricKind::Eta, 5, 0.5};  // (2 radius of {V <= e})^beta ~ 4.9
      c.coupling.replicates = 2000;
      c.coupling.n_steps = 200;
      c.drift.n_reps = 4000;
      c.drift.r_min = 0.1;
      c.drift.r_max = 200;
      c.drift.n_radii = 30;
      c.drift.directions = 3;
      c.stationary = {500, 50000, 50};
      break;
  }
  return c;
}

void validate_config(const ExperimentConfig& c) {
  check(c.version == kConfigVersion, "version", "unsupported schema version");
  check(!c.output.empty(), "output", "must be a nonempty path prefix");
  check(c.threads >= 0 && c.threads <= 1024, "threads", "must lie in [0, 1024]");

  const auto& r = c.rate;
  switch (r.family) {
    case RateFamily::Logarithmic: check(r.kappa > 0, "rate.kappa", "Logarithmic needs kappa > 0"); break;
    case RateFamily::Polynomial:
      check(r.kappa > 0 && r.kappa < 1, "rate.kappa", "Polynomial needs kappa in (0,1)");
      break;
    case RateFamily::Subexponential: check(r.kappa > 0, "rate.kappa", "Subexponential needs kappa > 0"); break;
    case RateFamily::PcnDrift:
      check(r.kappa > 0, "rate.kappa", "PcnDrift needs kappa > 0");
      check(r.c > 0 && r.c < 1, "rate.c", "PcnDrift needs c in (0,1)");
      check(r.beta > 0 && r.beta <= 1, "rate.beta", "PcnDrift needs beta in (0,1]");
      break;
    case RateFamily::Extended: break;
  }
  check(r.scale > 0, "rate.scale", "must be positive");
  check(r.extend_at >= 0, "rate.extend_at", "must be nonnegative");
  check(r.grid_horizon >= 1e3, "rate.grid_horizon", "must be at least 1e3");
  check(r.quad_tol > 0 && r.quad_tol < 1e-3, "rate.quad_tol", "must lie in (0, 1e-3)");
  check(r.inv_tol > 0 && r.inv_tol < 1e-3, "rate.inv_tol", "must lie in (0, 1e-3)");
  check(r.t_max > 1, "rate.t_max", "must exceed 1");
  check(r.points >= 2 && r.points <= 1000000, "rate.points", "must lie in [2, 1e6]");

  check(c.lattice.h > 0, "lattice.h", "must be positive");
  check(c.lattice.K >= 1 && c.lattice.K <= 1000000, "lattice.K", "must lie in [1, 1e6]");
  check(c.s_exponent > 2 && c.s_exponent < 2 + c.lattice.h, "lattice.s_exponent", "must lie in (2, 2 + h)");
  if (c.experiment == ExperimentKind::SrwmFull) {
    check(on_quarter_lattice(c.start) && std::abs(4 * c.start) <= c.lattice.K, "start",
          "must be a point of the truncated quarter lattice");
  }

  check(c.ar.p >= 1, "ar.p", "must be >= 1");
  check(c.ar.rho_ar > 0 && c.ar.rho_ar < 2, "ar.rho_ar", "must lie in (0, 2)");
  check(c.ar.sigma > 0, "ar.sigma", "must be positive");
  check(c.ar.beta0 > 0, "ar.beta0", "must be positive");
  check(c.ar.kappa0 > 0 && c.ar.kappa0 <= 1, "ar.kappa0", "must lie in (0, 1]");
  check(c.ar.beta > 0, "ar.beta", "must be positive");
  check(c.ar_contraction_radius > 0, "ar.contraction_radius", "must be positive");
  check(c.ar_lipschitz_pairs >= 1, "ar.lipschitz_pairs", "must be >= 1");

  check(c.pcn.rho > 0 && c.pcn.rho < 1, "pcn.rho_pcn", "must lie in (0, 1)");
  check(c.pcn.beta > 0 && c.pcn.beta <= 1, "pcn.beta", "must lie in (0, 1]");
  check(c.pcn.Cg >= 0, "pcn.Cg", "must be nonnegative");
  check(c.pcn.eigs.size() == c.pcn.p, "pcn.eigs", "must have p entries");
  check(c.pcn.theta > 0 && c.pcn.theta < 1 / (2 * c.pcn.eigs.maxCoeff()), "pcn.theta",
        "must lie in (0, 1/(2 max eigenvalue))");

  const auto& cc = c.coupling;
  check(cc.delta.threshold > 0, "coupling.delta.threshold", "must be positive");
  check(cc.ell >= 1, "coupling.ell", "must be >= 1");
  check(cc.ell_max >= cc.ell, "coupling.ell_max", "must be >= coupling.ell");
  check(cc.metric.eta > 0, "coupling.metric.eta", "must be positive");
  check(cc.metric.beta > 0 && cc.metric.beta <= 1, "coupling.metric.beta", "must lie in (0, 1]");
  check(cc.replicates >= 2, "coupling.replicates", "must be >= 2");
  check(cc.n_steps >= 1, "coupling.n_steps", "must be >= 1");

  check(!c.bounds.deltas.empty(), "bounds.deltas", "must be nonempty");
  for (double d : c.bounds.deltas) check(d > 0 && d < 1, "bounds.deltas", "entries must lie in (0, 1)");
  check(c.bounds.n_min >= 1, "bounds.n_min", "must be >= 1");
  check(c.bounds.n_max >= c.bounds.n_min, "bounds.n_max", "must be >= bounds.n_min");
  check(c.bounds.n_points >= 0, "bounds.n_points", "must be >= 0");
  check(c.bounds.n_points > 0 || c.bounds.n_max <= 1e7, "bounds.n_max", "every-integer grids stop at 1e7");

  const auto& d = c.drift;
  check(d.n_reps >= 10, "drift.n_reps", "must be >= 10");
  check(d.confidence > 0.5 && d.confidence < 1, "drift.confidence", "must lie in (0.5, 1)");
  check(d.c_hi > 0, "drift.c_hi", "must be positive");
  check(d.factor > 0 && d.factor < 1, "drift.factor", "must lie in (0, 1)");
  check(d.steps >= 1, "drift.steps", "must be >= 1");
  check(d.r_min > 0 && d.r_max > d.r_min, "drift.r_max", "needs 0 < r_min < r_max");
  check(d.n_radii >= 2, "drift.n_radii", "must be >= 2");
  check(d.directions >= 1, "drift.directions", "must be >= 1");
  check(d.upsilon >= 0, "drift.upsilon", "must be nonnegative");

  check(c.stationary.burn_in >= 0, "stationary.burn_in", "must be >= 0");
  check(c.stationary.samples >= 100, "stationary.samples", "must be >= 100");
  check(c.stationary.batches >= 2 && c.stationary.batches <= c.stationary.samples, "stationary.batches",
        "must lie in [2, samples]");

  const auto& t = c.table1;
  check(t.log_kappa > 0, "table1.log_kappa", "must be positive");
  check(t.poly_kappa > 0 && t.poly_kappa < 1, "table1.poly_kappa", "must lie in (0, 1)");
  check(t.subexp_kappa > 0, "table1.subexp_kappa", "must be positive");
  check(t.epsilon > 0 && t.epsilon < 1, "table1.epsilon", "must lie in (0, 1)");
  check(t.ell >= 1, "table1.ell", "must be >= 1");
  check(t.b_double >= 0, "table1.b_double", "must be nonnegative");
  check(t.sup_delta_V >= 2, "table1.sup_delta_V", "must be >= 2");
  check(t.M_phi > 0, "table1.M_phi", "must be positive");
  check(t.M_V >= 1, "table1.M_V", "must be >= 1");
  check(t.V_of_x >= 1, "table1.V_of_x", "must be >= 1");
  check(t.n_min >= 1 && t.n_max > t.n_min, "table1.n_max", "needs 1 <= n_min < n_max");
  check(t.subexp_n_min >= 1 && t.subexp_n_min < t.n_max, "table1.subexp_n_min", "needs 1 <= subexp_n_min < n_max");
  check(t.points >= 3, "table1.points", "must be >= 3");

  for (const auto& [x, y] : c.tail.pairs)
    check(on_quarter_lattice(x) && on_quarter_lattice(y) && std::abs(4 * x) <= c.lattice.K &&
              std::abs(4 * y) <= c.lattice.K,
          "tail.pairs", "points must lie on the truncated quarter lattice");
  check(c.tail.m_max_tail >= 0 && c.tail.m_max_prop >= 0, "tail.m_max_tail", "must be >= 0");
  check(c.tail.n_max_tail >= 1 && c.tail.n_max_prop >= 1, "tail.n_max_tail", "must be >= 1");
}

ExperimentConfig parse_config(const json& j) {
  Obj o(j, "");
  auto* ver = o.find("version");
  if (!ver) throw ConfigError("version", "version: required");
  if (!ver->is_number_integer() || ver->get<int>() != kConfigVersion)
    throw ConfigError("version", "version: unsupported schema version (expected 1)");
  std::string exp;
  if (!o.str("experiment", exp)) throw ConfigError("experiment", "experiment: required");
  ExperimentConfig c = default_config(experiment_from_string(exp));
  if (auto* s = o.find("seed")) {
    if (!s->is_number_integer() || (s->is_number_integer() && !s->is_number_unsigned() && s->get<long long>() < 0))
      throw ConfigError("seed", "seed: expected a nonnegative 64-bit integer");
    c.seed = s->get<std::uint64_t>();
  }
  o.str("output", c.output);
  o.integer("threads", c.threads);
  o.num("start", c.start);
  if (auto* s = o.find("rate")) parse_rate(*s, c.rate);
  if (auto* s = o.find("lattice")) parse_lattice(*s, c);
  if (auto* s = o.find("ar")) parse_ar(*s, c);
  if (auto* s = o.find("pcn")) parse_pcn(*s, c);
  if (auto* s = o.find("coupling")) parse_coupling(*s, c.coupling);
  if (auto* s = o.find("bounds")) parse_bounds(*s, c.bounds);
  if (auto* s = o.find("drift")) parse_drift(*s, c.drift);
  if (auto* s = o.find("stationary")) parse_stationary(*s, c.stationary);
  if (auto* s = o.find("table1")) parse_table1(*s, c.table1);
  if (auto* s = o.find("tail")) parse_tail(*s, c.tail);
  o.finish();
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "config: cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = c.version;
  j["experiment"] = to_string(c.experiment);
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["threads"] = c.threads;
  j["start"] = c.start;
  j["rate"] = {{"family", family_name(c.rate.family)}, {"kappa", c.rate.kappa},         {"scale", c.rate.scale},
               {"c", c.rate.c},                      {"beta", c.rate.beta},           {"extend_at", c.rate.extend_at},
               {"grid_horizon", c.rate.grid_horizon}, {"quad_tol", c.rate.quad_tol},  {"inv_tol", c.rate.inv_tol},
               {"t_max", c.rate.t_max},              {"points", c.rate.points}};
  j["lattice"] = {{"h", c.lattice.h}, {"K", c.lattice.K}, {"s_exponent", c.s_exponent}};
  j["ar"] = {{"p", c.ar.p},
             {"rho_ar", c.ar.rho_ar},
             {"noise", c.ar.noise == NoiseKind::Gaussian ? "Gaussian" : "TruncatedExp"},
             {"sigma", c.ar.sigma},
             {"beta0", c.ar.beta0},
             {"kappa0", c.ar.kappa0},
             {"beta", c.ar.beta},
             {"contraction_radius", c.ar_contraction_radius},
             {"lipschitz_pairs", c.ar_lipschitz_pairs}};
  std::vector<double> eigs(c.pcn.eigs.data(), c.pcn.eigs.data() + c.pcn.eigs.size());
  j["pcn"] = {{"p", c.pcn.p},       {"rho_pcn", c.pcn.rho},     {"beta", c.pcn.beta},
              {"Cg", c.pcn.Cg},     {"theta", c.pcn.theta},     {"eigs", eigs}};
  j["coupling"] = {
      {"delta",
       {{"kind", c.coupling.delta_from_drift ? "FromDrift" : delta_name(c.coupling.delta.kind)},
        {"threshold", c.coupling.delta.threshold}}},
      {"ell", c.coupling.ell},
      {"ell_max", c.coupling.ell_max},
      {"metric",
       {{"kind", c.coupling.metric.kind == MetricKind::Trivial ? "Trivial" : "Eta"},
        {"eta", c.coupling.metric.eta},
        {"beta", c.coupling.metric.beta}}},
      {"replicates", c.coupling.replicates},
      {"n_steps", c.coupling.n_steps}};
  j["bounds"] = {{"deltas", c.bounds.deltas},
                 {"n_min", c.bounds.n_min},
                 {"n_max", c.bounds.n_max},
                 {"n_points", c.bounds.n_points}};
  j["drift"] = {{"n_reps", c.drift.n_reps},       {"confidence", c.drift.confidence}, {"c_hi", c.drift.c_hi},
                {"factor", c.drift.factor},       {"steps", c.drift.steps},           {"r_min", c.drift.r_min},
                {"r_max", c.drift.r_max},         {"n_radii", c.drift.n_radii},       {"directions", c.drift.directions},
                {"upsilon", c.drift.upsilon}};
  j["stationary"] = {{"burn_in", c.stationary.burn_in},
                     {"samples", c.stationary.samples},
                     {"batches", c.stationary.batches}};
  const auto& t = c.table1;
  j["table1"] = {{"log_kappa", t.log_kappa}, {"poly_kappa", t.poly_kappa}, {"subexp_kappa", t.subexp_kappa},
                 {"epsilon", t.epsilon},     {"ell", t.ell},               {"b_double", t.b_double},
                 {"sup_delta_V", t.sup_delta_V}, {"M_phi", t.M_phi},       {"M_V", t.M_V},
                 {"V_of_x", t.V_of_x},       {"n_min", t.n_min},           {"n_max", t.n_max},
                 {"subexp_n_min", t.subexp_n_min}, {"points", t.points}};
  json pairs = json::array();
  for (const auto& [x, y] : c.tail.pairs) pairs.push_back({x, y});
  j["tail"] = {{"pairs", pairs},
               {"m_max_tail", c.tail.m_max_tail},
               {"n_max_tail", c.tail.n_max_tail},
               {"m_max_prop", c.tail.m_max_prop},
               {"n_max_prop", c.tail.n_max_prop}};
  return j;
}

}  // namespace subgeo
