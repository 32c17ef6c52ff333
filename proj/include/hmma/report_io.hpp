#pragma once

// Output files. Every data file is a deterministic function of the inputs:
// CSVs start with a "# manifest_id=" comment, then a header whose column
// names carry units. Wall-clock data lives only in manifest.json. Layouts are
// documented in docs/outputs.md.

#include <filesystem>
#include <string>
#include <vector>

#include "hmma/orchestrator.hpp"

namespace hmma {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunManifest {
  std::string command;  // run, compare or sweep
  std::string config_path;
  std::string config_json;  // resolved configuration, see dump_config
  std::vector<std::string> schemes;
  unsigned long long seed = 0;
  std::string out_dir;
  std::string axis;  // sweep only
  std::vector<double> values;
  std::string tool_version = kToolVersion;
  std::string timestamp;  // UTC, ISO 8601

  // Hash of every field except the timestamp and output directory, so the
  // id names the experiment rather than the invocation.
  std::string id() const;
};

// Current UTC time, or SOURCE_DATE_EPOCH when that variable is set, so
// reproducible-build style reruns can produce identical manifests.
std::string utc_timestamp();

// Shortest decimal that round-trips the double ("nan" for NaN).
std::string format_number(double x);

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

// summary.txt, eta_trace.csv, trajectory.csv, allocation.csv, users.csv.
void write_report(const std::filesystem::path& dir, const std::string& manifest_id, const Scenario& scenario,
                  const SolveReport& report);

// comparison.csv with one row per scheme.
void write_comparison(const std::filesystem::path& file, const std::string& manifest_id, const Scenario& scenario,
                      const std::vector<SolveReport>& reports);

// One CSV per metric (sweep_<metric>.csv), rows keyed by axis value, one
// column per scheme, plus sweep_status.csv with per-run errors.
void write_sweep(const std::filesystem::path& dir, const std::string& manifest_id, SweepAxis axis,
                 const std::vector<double>& values, const std::vector<Scheme>& schemes,
                 const std::vector<SweepEntry>& entries);

// Column label of an axis with its unit, e.g. "smax_mps".
std::string axis_column(SweepAxis axis);

}  // namespace hmma
