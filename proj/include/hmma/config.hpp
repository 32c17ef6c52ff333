#pragma once

// JSON experiment configuration. Every key is optional and defaults to the
// reference profile; unknown keys are rejected so typos do not pass silently.
// The schema is documented in docs/config.md.

#include <string>

#include "hmma/convex_solver.hpp"
#include "hmma/orchestrator.hpp"

namespace hmma {

struct ExperimentConfig {
  Experiment experiment;
  SolverSettings solver;
};

// Throws ConfigError. Syntax errors carry the line and column; value errors
// name the dotted key path (for example "users.list[2].mrr").
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON of the resolved configuration (linear units, all keys).
std::string dump_config(const ExperimentConfig& config);

}  // namespace hmma
