#pragma once

#include <stdexcept>
#include <string>

namespace hmma {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario fails validation (bad sizes, out-of-range ratios, ...).
class InvalidScenario : public Error {
 public:
  using Error::Error;
};

class InfeasiblePropulsion : public Error {
 public:
  using Error::Error;
};

class BadCardinality : public Error {
 public:
  using Error::Error;
};

// A subproblem solver did not return an optimal point.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

// Configuration parse / validation error. `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace hmma
