#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "denscov/metrics.hpp"
#include "denscov/sim.hpp"

namespace denscov {

struct OutputOptions {
  std::string dir = "out";
  bool trajectories = true;
  bool ledger = true;
  bool plans = true;
  bool cloud = true;
};

struct ConfigFile {
  Scenario scenario;
  OutputOptions output;
  std::vector<std::string> warnings;  // non-fatal notes emitted during parsing
  std::string raw;                    // original file bytes, hashed into the manifest
};

/// Parse and validate a scenario config (JSON). Messages carry the offending
/// key path. Throws ValidationError on schema or cross-field errors.
/// Relative density-grid paths resolve against base_dir.
ConfigFile load_config(const std::string& path);
ConfigFile parse_config(const std::string& json_text, const std::string& base_dir = "");

/// Parse just a density section (the JSON object under "density").
DensitySpec parse_density_json(const std::string& json_text, const std::string& base_dir = "");

/// FNV-1a 64-bit over the raw config bytes, as 16 hex digits.
std::string config_hash(const std::string& raw);

/// Write the run artifacts under `dir`: per-agent trajectory CSVs
/// (k,t,x...,px,py), remaining-weight series CSV, transport-plan CSV, cloud
/// CSV, final ledger CSV and manifest.json. All floats use 17 significant
/// digits. The manifest's wall_time_s field is the only non-deterministic
/// output of a run.
std::vector<std::string> write_run_outputs(const ConfigFile& config, const SimResult& result,
                                           const std::string& dir);

void write_metrics_json(const MetricsReport& report, const std::string& path);

/// Rebuild enough of a SimResult from a run directory to recompute metrics.
SimResult load_run_outputs(const std::string& dir);

}  // namespace denscov
