#pragma once

#include <stdexcept>
#include <string>

namespace subgeo {

// Every failure carries the module that raised it so the CLI can produce a
// structured report naming module and assertion.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Argument outside the domain of a function (e.g. phi(t) with t < 1).
class DomainError : public Error {
  using Error::Error;
};

/// Quadrature or root finding did not reach the requested tolerance.
class ConvergenceError : public Error {
  using Error::Error;
};

/// A constant, drift or coupling property could not be certified.
class CertificationError : public Error {
  using Error::Error;
};

/// Work or memory budget exceeded.
class BudgetError : public Error {
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("cli", what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace subgeo
