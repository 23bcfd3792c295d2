#pragma once

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "phsync/config.hpp"

namespace phsync::cli {

enum ExitCode : int { ok = 0, runtime_failure = 1, config_error = 2 };

enum class PotentialMode { scan, minimize };

struct CommandOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  bool allow_large_dt = false;
  std::optional<Vec> theta_dq;  // steady-state
  PotentialMode potential_mode = PotentialMode::minimize;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

/// Writes the trajectory CSV (".partial" when the run aborted) and a summary
/// of key: value lines into out_dir.
int cmd_simulate(const CommandOptions& opts);

/// Prints the regulator residuals, Y_net, K_net(theta_dq), the steady input
/// and the steady flow at theta_dq.
int cmd_steady_state(const CommandOptions& opts);

/// scan: writes the torus scan CSV. minimize: multi-start descent report.
int cmd_potential(const CommandOptions& opts);

/// Sampled damping-condition certificate plus regulator and Hurwitz checks.
/// A failing condition is data; only compute failures exit non-zero.
int cmd_check(const CommandOptions& opts);

/// Dissipation-check sample set: theta_1 = 0 and a uniform grid over the
/// remaining angles, or `fallback` seeded random points when the grid
/// would exceed `max_points`.
std::vector<Vec> check_samples(Index n, int grid, std::uint64_t seed,
                               std::size_t max_points = 200000, std::size_t fallback = 20000);

}  // namespace phsync::cli
