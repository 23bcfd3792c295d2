#pragma once

#include <cstdint>
#include <string>

#include "phsync/sim.hpp"

namespace phsync {

struct OutputPaths {
  std::string trajectory = "trajectory.csv";
  std::string summary = "summary.txt";
  std::string scan = "potential_scan.csv";
  std::string report = "report.txt";
};

struct PotentialSettings {
  int resolution = 360;  // grid points per angle
  int restarts = 20;
  int full_scan_max_machines = 2;  // full torus scan up to this n, gauge-fixed above
};

/// One self-contained scenario: network, controller, initial state,
/// integrator and output names.
struct ScenarioConfig {
  std::string name;
  SystemParams params;
  ControllerSpec controller;
  InitialSpec initial;
  IntegratorConfig integrator;
  OutputPaths outputs;
  PotentialSettings potential;
  int check_grid = 24;  // samples per free angle for the dissipation check
  std::uint64_t seed = 1;
};

/// Parses the JSON scenario format. Throws ConfigError naming the offending
/// field, e.g. "machines[0].M: missing field".
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Inverse of parse_config up to formatting (omega0 and absolute omega are
/// written even when the input used frequency_hz or omega_pu).
std::string serialize_config(const ScenarioConfig& cfg, int indent = 2);

}  // namespace phsync
