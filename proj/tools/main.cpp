#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phsync/cli.hpp"

int main(int argc, char** argv) {
  using namespace phsync;
  CLI::App app{"Synchronization of multi-machine power networks: simulation and analysis"};
  app.require_subcommand(1);

  cli::CommandOptions opts;
  std::vector<double> theta_dq;
  std::string mode = "minimize";
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Scenario config (JSON)")->required();
    sub->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Seed for randomized restarts and samples");
  };

  auto* simulate = app.add_subcommand("simulate", "Integrate the closed loop and write a trajectory CSV");
  common(simulate);
  simulate->add_flag("--dry-run", opts.dry_run, "Validate and print derived quantities only");
  simulate->add_flag("--allow-large-dt", opts.allow_large_dt,
                     "Accept fixed steps above 0.2 x the fastest electrical time constant");

  auto* steady = app.add_subcommand("steady-state", "Print the steady flow and input at theta_dq");
  common(steady);
  steady->add_option("--theta-dq", theta_dq, "Relative angles, one per machine")->delimiter(',');

  auto* potential = app.add_subcommand("potential", "Scan or minimize the network potential");
  common(potential);
  potential->add_option("mode", mode, "scan | minimize")
      ->check(CLI::IsMember({"scan", "minimize"}))
      ->capture_default_str();

  auto* check = app.add_subcommand("check", "Sampled damping-condition certificate");
  common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(cli::config_error);
  }

  auto seed_given = [&](CLI::App* sub) { return sub->count("--seed") > 0; };
  if (!theta_dq.empty()) opts.theta_dq = Eigen::Map<const Vec>(theta_dq.data(), theta_dq.size());
  opts.potential_mode = mode == "scan" ? cli::PotentialMode::scan : cli::PotentialMode::minimize;

  if (simulate->parsed()) {
    if (seed_given(simulate)) opts.seed = seed;
    return cli::cmd_simulate(opts);
  }
  if (steady->parsed()) {
    if (seed_given(steady)) opts.seed = seed;
    return cli::cmd_steady_state(opts);
  }
  if (potential->parsed()) {
    if (seed_given(potential)) opts.seed = seed;
    return cli::cmd_potential(opts);
  }
  if (seed_given(check)) opts.seed = seed;
  return cli::cmd_check(opts);
}
