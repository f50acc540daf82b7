// subgeo: configuration-driven runner for the convergence experiments.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "subgeo/config.hpp"
#include "subgeo/error.hpp"
#include "subgeo/experiments.hpp"
#include "subgeo/io.hpp"

using namespace subgeo;

namespace {

constexpr int kOk = 0, kAssertion = 1, kConfig = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master seed (64-bit)");
  app->add_option("--out", c.out, "output path prefix");
  app->add_option("--threads", c.threads, "worker threads (default: SUBGEO_THREADS, else 1)")
      ->check(CLI::Range(1, 1024));
}

ExperimentConfig assemble(const Common& c, ExperimentKind fallback, Stage stage) {
  ExperimentConfig cfg = c.config.empty() ? default_config(fallback) : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output = c.out;
  if (c.threads) cfg.threads = *c.threads;
  cfg.stage = stage;
  validate_config(cfg);
  return cfg;
}

void write_error(const std::string& prefix, const nlohmann::json& report) {
  std::cerr << report.dump(2) << '\n';
  try {
    std::ofstream os(output_path(prefix, "error.json"));
    os << report.dump(2) << '\n';
  } catch (...) {
  }
}

int run(const ExperimentConfig& cfg) {
  try {
    auto res = run_experiment(cfg);
    for (const auto& a : res.assertions)
      std::printf("%s  [%s] %s%s%s\n", a.passed ? "PASS" : "FAIL", a.module.c_str(), a.name.c_str(),
                  a.detail.empty() ? "" : ": ", a.detail.c_str());
    for (const auto& f : res.files) std::printf("wrote %s\n", f.c_str());
    if (!res.ok()) {
      for (const auto& a : res.assertions)
        if (!a.passed) {
          write_error(cfg.output, error_report(a.module, a.name, a.detail.empty() ? "assertion failed" : a.detail));
          break;
        }
      return kAssertion;
    }
    return kOk;
  } catch (const ConfigError& e) {
    write_error(cfg.output, config_error_report(e.field(), e.what()));
    return kConfig;
  } catch (const Error& e) {
    write_error(cfg.output, error_report(e.module(), "pipeline completed", e.what()));
    return kAssertion;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subgeo: subgeometric convergence bounds for Markov chains"};
  app.require_subcommand(1);

  Common rates_c, drift_c, couple_c, bound_c, exp_c;
  std::string family;
  std::optional<double> kappa;
  std::string drift_chain = "srwm", couple_chain = "srwm", bound_chain = "srwm";

  auto* rates = app.add_subcommand("rates", "tabulate H, H^-1, r and R for one rate function");
  add_common(rates, rates_c);
  rates->add_option("--family", family, "Logarithmic | Polynomial | Subexponential | PcnDrift");
  rates->add_option("--kappa", kappa, "family parameter");

  auto* drift = app.add_subcommand("drift", "calibrate and certify the single and double drift");
  add_common(drift, drift_c);
  drift->add_option("--chain", drift_chain, "srwm | ar | pcn")->check(CLI::IsMember({"srwm", "ar", "pcn"}));

  auto* couple = app.add_subcommand("couple", "drift plus coupling-set verification");
  add_common(couple, couple_c);
  couple->add_option("--chain", couple_chain, "srwm | ar | pcn")->check(CLI::IsMember({"srwm", "ar", "pcn"}));

  auto* bound = app.add_subcommand("bound", "full pipeline up to the validated bounds");
  add_common(bound, bound_c);
  bound->add_option("--chain", bound_chain, "srwm | ar | pcn | tail | synthetic")
      ->check(CLI::IsMember({"srwm", "ar", "pcn", "tail", "synthetic"}));

  auto* experiment = app.add_subcommand("experiment", "run the experiment named in the config");
  add_common(experiment, exp_c);
  experiment->get_option("--config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  auto chain_kind = [](const std::string& c) {
    if (c == "ar") return ExperimentKind::ArFull;
    if (c == "pcn") return ExperimentKind::PcnFull;
    if (c == "tail") return ExperimentKind::TailCheck;
    if (c == "synthetic") return ExperimentKind::Table1Check;
    return ExperimentKind::SrwmFull;
  };

  ExperimentConfig cfg;
  try {
    if (*rates) {
      cfg = assemble(rates_c, ExperimentKind::RateTables, Stage::All);
      if (cfg.experiment != ExperimentKind::RateTables)
        throw ConfigError("experiment", "experiment: the rates subcommand needs RateTables");
      if (!family.empty()) {
        nlohmann::json j = to_json(cfg);
        j["rate"]["family"] = family;
        if (kappa) j["rate"]["kappa"] = *kappa;
        cfg = parse_config(j);
        if (rates_c.threads) cfg.threads = *rates_c.threads;
      } else if (kappa) {
        cfg.rate.kappa = *kappa;
        validate_config(cfg);
      }
    } else if (*drift) {
      cfg = assemble(drift_c, chain_kind(drift_chain), Stage::Drift);
    } else if (*couple) {
      cfg = assemble(couple_c, chain_kind(couple_chain), Stage::Coupling);
    } else if (*bound) {
      cfg = assemble(bound_c, chain_kind(bound_chain), Stage::All);
    } else {
      cfg = assemble(exp_c, ExperimentKind::RateTables, Stage::All);
    }
  } catch (const ConfigError& e) {
    std::cerr << config_error_report(e.field(), e.what()).dump(2) << '\n';
    return kConfig;
  }
  return run(cfg);
}
