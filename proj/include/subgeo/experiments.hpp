#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "subgeo/config.hpp"

namespace subgeo {

/// A named property checked by a pipeline. A failed assertion makes the run
/// exit with status 1; the data files are still written.
struct Assertion {
  std::string name;
  std::string module;
  bool passed = false;
  std::string detail;
};

struct ExperimentResult {
  nlohmann::json results;  // every number tagged with its provenance
  std::vector<Assertion> assertions;
  std::vector<std::string> files;  // CSV files and the summary, in write order
  std::string summary_path;
  bool ok() const;
};

/// Runs the configured pipeline, writes `<output>_*.csv` and
/// `<output>_summary.json`. Library errors propagate (the CLI turns them
/// into a structured report); assertion failures are recorded, not thrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Structured error document written when a pipeline throws.
nlohmann::json error_report(const std::string& module, const std::string& assertion, const std::string& message);
/// Schema rejection: module "cli", assertion "schema", plus the field.
nlohmann::json config_error_report(const std::string& field, const std::string& message);

}  // namespace subgeo
