#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "subgeo/chains.hpp"
#include "subgeo/coupling.hpp"
#include "subgeo/rates.hpp"

namespace subgeo {

enum class ExperimentKind { RateTables, Table1Check, SrwmFull, ArFull, PcnFull, TailCheck };
const char* to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& s);  // throws ConfigError

/// Pipelines can be cut short (used by the drift / couple subcommands).
enum class Stage { Drift, Coupling, All };

inline constexpr int kConfigVersion = 1;

struct RateConfig {
  RateFamily family = RateFamily::Polynomial;
  double kappa = 0.5;
  double scale = 1.0;
  double c = 0.5;      // PcnDrift only
  double beta = 0.5;   // PcnDrift only
  double extend_at = 0;  // concave continuation below this point (0 = none)
  double grid_horizon = 1e4;
  double quad_tol = 1e-10;
  double inv_tol = 1e-12;
  double t_max = 1e6;  // RateTables range [1, t_max]
  int points = 1000;

  ConcaveRate build() const;
};

struct CouplingConfig {
  bool delta_from_drift = true;  // Delta = {V <= upsilon}^2 from the double drift
  CouplingSet delta{DeltaKind::ProductBall, 0.5};
  int ell = 2;
  int ell_max = 64;  // pCN search limit (doubling)
  MetricSpec metric;
  int replicates = 2000;
  long n_steps = 300;  // empirical distance horizon (AR / pCN)
};

struct BoundConfig {
  std::vector<double> deltas{0.5};
  double n_min = 1;
  double n_max = 1e4;
  int n_points = 0;  // 0: every integer in [n_min, n_max]; else log-spaced
};

struct DriftConfig {
  int n_reps = 4000;
  double confidence = 0.975;
  double c_hi = 1.0;
  double factor = 0.98;
  int steps = 900;
  // radial check points for AR / pCN
  double r_min = 0.5;
  double r_max = 5000;
  int n_radii = 40;
  int directions = 2;
  double upsilon = 0;  // 0: phi^{-1}(4b)
};

struct StationaryConfig {
  long burn_in = 2000;
  long samples = 200000;
  int batches = 50;
};

struct Table1Config {
  double log_kappa = 1.5;
  double poly_kappa = 0.5;
  double subexp_kappa = 1.0;
  double epsilon = 0.9;
  int ell = 1;
  double b_double = 1;
  double sup_delta_V = 4;
  double M_phi = 2;
  double M_V = 2;
  double V_of_x = 1;
  double n_min = 1e3;
  double n_max = 1e6;
  double subexp_n_min = 1e2;
  int points = 61;
};

struct TailConfig {
  std::vector<std::pair<double, double>> pairs{{-0.5, 0.5}, {0.0, 5.0}, {-10.0, 10.0}};
  int m_max_tail = 5;
  long n_max_tail = 400;
  int m_max_prop = 10;
  long n_max_prop = 500;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  ExperimentKind experiment = ExperimentKind::RateTables;
  std::uint64_t seed = 20240601;
  std::string output = "out/run";
  int threads = 0;  // 0: SUBGEO_THREADS or 1
  Stage stage = Stage::All;

  RateConfig rate;
  LatticeSpec lattice{0.4, 2000};
  double s_exponent = 2.2;
  double start = 0;  // lattice point, or radius along e_1 for AR / pCN
  ARSpec ar;
  double ar_contraction_radius = 1.5;
  int ar_lipschitz_pairs = 10000;
  PcnSpec pcn;
  CouplingConfig coupling;
  BoundConfig bounds;
  DriftConfig drift;
  StationaryConfig stationary;
  Table1Config table1;
  TailConfig tail;
};

/// Defaults for one experiment (desk-scale parameters).
ExperimentConfig default_config(ExperimentKind kind);

/// Parses and validates a versioned JSON document. Unknown keys and
/// out-of-range values throw ConfigError naming the field ("rate.kappa").
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
/// Range checks on an assembled config (also run by parse_config).
void validate_config(const ExperimentConfig& cfg);

/// The effective configuration, in the same schema parse_config reads.
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace subgeo
