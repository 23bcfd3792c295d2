#include "phsync/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <Eigen/SVD>

#include "phsync/algebra.hpp"

namespace phsync::cli {

namespace fs = std::filesystem;

namespace {

// Loads the config and maps the exception families onto exit codes.
template <typename Body>
int guarded(const CommandOptions& opts, Body&& body) {
  try {
    const ScenarioConfig cfg = load_config(opts.config_path);
    return body(cfg);
  } catch (const ConfigError& e) {
    *opts.err << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const ParameterError& e) {
    *opts.err << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    *opts.err << "error: " << e.what() << '\n';
    return runtime_failure;
  }
}

std::string join(const Vec& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

void write_matrix(std::ostream& os, const Mat& m) {
  for (Index r = 0; r < m.rows(); ++r) os << join(m.row(r).transpose()) << '\n';
}

fs::path output_path(const CommandOptions& opts, const std::string& name) {
  fs::create_directories(opts.out_dir);
  return fs::path(opts.out_dir) / name;
}

double condition_number(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  return s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : std::numeric_limits<double>::infinity();
}

double max_pairwise(const Vec& theta) {
  double worst = 0.0;
  for (Index i = 0; i < theta.size(); ++i) {
    for (Index j = i + 1; j < theta.size(); ++j) {
      worst = std::max(worst, std::abs(algebra::wrap_angle(theta[i] - theta[j])));
    }
  }
  return worst;
}

void print_derived(std::ostream& os, const ScenarioConfig& cfg, const Controller& ctrl) {
  const SystemParams& p = cfg.params;
  const SteadyStateMap& ss = ctrl.steady_state_map();
  const double fastest = fastest_time_constant(p);
  os << std::setprecision(10);
  os << "scenario: " << cfg.name << '\n';
  os << "machines: " << p.n() << '\n';
  os << "lines: " << p.m() << '\n';
  os << "controller: " << to_string(cfg.controller.kind) << '\n';
  os << "omega0: " << cfg.controller.omega0 << '\n';
  os << "sylvester_residual: " << ss.sylvester_residual() << '\n';
  os << "y_net_condition: " << condition_number(ss.y_net()) << '\n';
  os << "spectral_abscissa: " << spectral_abscissa(p) << '\n';
  os << "fastest_time_constant: " << fastest << '\n';
  os << "slowest_time_constant: " << slowest_time_constant(p) << '\n';
  os << "integrator: " << to_string(cfg.integrator.method) << '\n';
  os << "dt: " << cfg.integrator.dt << '\n';
  os << "dt_over_fastest: " << cfg.integrator.dt / fastest << '\n';
  os << "t_end: " << cfg.integrator.t_end << '\n';
}

}  // namespace

int cmd_simulate(const CommandOptions& opts) {
  return guarded(opts, [&](ScenarioConfig cfg) {
    if (opts.allow_large_dt) cfg.integrator.allow_large_dt = true;
    const Controller ctrl(cfg.params, cfg.controller);
    const State x0 = build_initial_state(cfg.params, &ctrl.steady_state_map(), cfg.initial);

    if (opts.dry_run) {
      print_derived(*opts.out, cfg, ctrl);
      cfg.integrator.validate();
      const double fastest = fastest_time_constant(cfg.params);
      const bool guard = cfg.integrator.method == IntegrationMethod::rk4_fixed &&
                         cfg.integrator.dt > 0.2 * fastest && !cfg.integrator.allow_large_dt;
      *opts.out << "step_guard: " << (guard ? "reject" : "ok") << '\n';
      return guard ? static_cast<int>(config_error) : static_cast<int>(ok);
    }

    const auto start = std::chrono::steady_clock::now();
    const Trajectory traj = simulate(cfg.params, ctrl, x0, cfg.integrator);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    fs::path csv = output_path(opts, cfg.outputs.trajectory);
    if (!traj.ok()) csv += ".partial";
    {
      std::ofstream f(csv);
      if (!f) throw std::runtime_error("cannot write " + csv.string());
      write_trajectory_csv(f, cfg.params, traj);
    }

    const SystemParams& p = cfg.params;
    const double w0 = cfg.controller.omega0;
    std::ofstream s(output_path(opts, cfg.outputs.summary));
    s << std::setprecision(10);
    s << "scenario: " << cfg.name << '\n';
    s << "status: " << to_string(traj.status) << '\n';
    if (!traj.ok()) {
      s << "failure_time: " << traj.failure_time << '\n';
      s << "message: " << traj.message << '\n';
    }
    s << "trajectory: " << csv.filename().string() << '\n';
    s << "samples: " << traj.size() << '\n';
    s << "steps: " << traj.steps << '\n';
    s << "wall_time_s: " << wall << '\n';
    if (traj.size() > 0) {
      const State& xf = traj.states.back();
      const MachineCurrents cur = currents_from_fluxes(p, xf.theta, xf.lambda_s, xf.lambda_r);
      const Vec& irs = cfg.controller.i_r_star;
      double ir_rel = 0.0;
      for (Index i = 0; i < p.n(); ++i) {
        const double d = std::abs(cur.i_r[i] - irs[i]);
        ir_rel = std::max(ir_rel, irs[i] > 0.0 ? d / irs[i] : d);
      }
      s << "t_final: " << traj.t.back() << '\n';
      s << "final_omega_error_rel: "
        << (xf.omega - Vec::Constant(p.n(), w0)).cwiseAbs().maxCoeff() / w0 << '\n';
      s << "final_i_r_error_rel: " << ir_rel << '\n';
      s << "final_max_pairwise_angle: " << max_pairwise(xf.theta) << '\n';
      s << "final_H: " << traj.diagnostics.back().H << '\n';
      s << "final_H_tilde: " << traj.diagnostics.back().H_tilde << '\n';
      s << "final_S: " << traj.diagnostics.back().S << '\n';

      const BoundednessReport b = boundedness_probe(p, traj.states);
      s << "growth_flag: " << (b.growth_flag ? "true" : "false") << '\n';
      for (const auto& q : b.quantities) s << "max_norm_" << q.name << ": " << q.max_norm << '\n';

      const MonotonicityVerdict mv = shifted_energy_monotonicity(traj, irs);
      s << "h_tilde_window_reached: " << (mv.window_reached ? "true" : "false") << '\n';
      if (mv.window_reached) s << "h_tilde_window_start: " << traj.t[mv.first_index] << '\n';
      s << "h_tilde_non_increasing: " << (mv.non_increasing ? "true" : "false") << '\n';
      s << "h_tilde_worst_relative_increase: " << mv.worst_increase << '\n';
    }
    if (!traj.ok()) {
      *opts.err << "simulation aborted: " << traj.message << " (partial output kept in "
                << csv.string() << ")\n";
      return static_cast<int>(runtime_failure);
    }
    *opts.out << "wrote " << csv.string() << '\n';
    return static_cast<int>(ok);
  });
}

int cmd_steady_state(const CommandOptions& opts) {
  return guarded(opts, [&](const ScenarioConfig& cfg) {
    const SystemParams& p = cfg.params;
    const Index n = p.n();
    Vec theta = Vec::Zero(n);
    if (opts.theta_dq) {
      theta = *opts.theta_dq;
    } else if (cfg.controller.theta_dq) {
      theta = *cfg.controller.theta_dq;
    }
    if (theta.size() != n) {
      throw ConfigError("theta_dq: expected " + std::to_string(n) + " angles");
    }
    const SteadyStateMap ss(p, cfg.controller.omega0, cfg.controller.i_r_star);
    const PhasorResiduals res = phasor_residuals(ss, p, theta);
    const ControlInput u = u_star(ss, p, theta, cfg.controller);
    const NetworkFlow f = network_flow(ss, p, theta);

    std::ostream& os = *opts.out;
    os << std::setprecision(17);
    os << "theta_dq: " << join(theta) << '\n';
    os << "sylvester_residual: " << ss.sylvester_residual() << '\n';
    os << "stator_residual: " << res.stator << '\n';
    os << "kcl_residual: " << res.bus << '\n';
    os << "line_residual: " << res.line << '\n';
    os << "losses: " << steady_state_losses(ss, p, theta) << '\n';
    os << "# y_net\n";
    write_matrix(os, ss.y_net());
    os << "# k_net\n";
    write_matrix(os, k_net(ss, p, theta));
    os << "# u_star\nmachine,u_m,u_r\n";
    for (Index i = 0; i < n; ++i) os << i + 1 << ',' << u.u_m[i] << ',' << u.u_r[i] << '\n';
    os << "# flow\nquantity,index,value\n";
    auto dump = [&](const char* name, const Vec& v) {
      for (Index k = 0; k < v.size(); ++k) os << name << ',' << k + 1 << ',' << v[k] << '\n';
    };
    dump("i_s", f.i_s);
    dump("v", f.v);
    dump("i_t", f.i_t);
    return static_cast<int>(ok);
  });
}

int cmd_potential(const CommandOptions& opts) {
  return guarded(opts, [&](const ScenarioConfig& cfg) {
    const SystemParams& p = cfg.params;
    const SteadyStateMap ss(p, cfg.controller.omega0, cfg.controller.i_r_star);
    const PotentialEvaluator ev(p, ss);
    std::ostream& os = *opts.out;
    os << std::setprecision(12);

    if (opts.potential_mode == PotentialMode::scan) {
      const bool full = p.n() <= cfg.potential.full_scan_max_machines;
      const TorusScan scan = scan_torus(ev, cfg.potential.resolution, !full);
      const fs::path path = output_path(opts, cfg.outputs.scan);
      std::ofstream f(path);
      if (!f) throw std::runtime_error("cannot write " + path.string());
      write_scan_csv(f, scan);
      const std::size_t k = scan.argmin();
      os << "scan: " << path.string() << '\n';
      os << "mode: " << (full ? "full" : "gauge_fixed") << '\n';
      os << "rows: " << scan.values.size() << '\n';
      os << "argmin_theta: " << join(scan.theta_at(k)) << '\n';
      os << "min_S: " << scan.values[k] << '\n';
      return static_cast<int>(ok);
    }

    const std::uint64_t seed = opts.seed.value_or(cfg.seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    const Index n = p.n();
    os << "seed: " << seed << '\n';
    os << "restarts: " << cfg.potential.restarts << '\n';
    std::ostringstream table;
    table << std::setprecision(12) << "restart";
    for (Index i = 1; i <= n; ++i) table << ",theta_" << i;
    table << ",S,gradient_norm,kind,converged\n";
    double worst_spread = 0.0;
    double best = std::numeric_limits<double>::infinity();
    Vec best_theta;
    bool all_converged = true;
    for (int r = 0; r < cfg.potential.restarts; ++r) {
      Vec t0(n);
      for (Index i = 0; i < n; ++i) t0[i] = angle(rng);
      const CriticalPoint cp = minimize(ev, t0);
      all_converged = all_converged && cp.converged;
      worst_spread = std::max(worst_spread, max_pairwise(cp.theta));
      if (cp.value < best) {
        best = cp.value;
        best_theta = cp.theta;
      }
      table << r << ',' << join(cp.theta) << ',' << cp.value << ',' << cp.gradient_norm << ','
            << to_string(cp.kind) << ',' << (cp.converged ? "true" : "false") << '\n';
    }
    os << "all_converged: " << (all_converged ? "true" : "false") << '\n';
    os << "best_S: " << best << '\n';
    os << "best_theta: " << join(best_theta) << '\n';
    os << "max_pairwise_angle: " << worst_spread << '\n';
    os << table.str();
    return static_cast<int>(ok);
  });
}

std::vector<Vec> check_samples(Index n, int grid, std::uint64_t seed, std::size_t max_points,
                               std::size_t fallback) {
  std::vector<Vec> out;
  if (n == 1) {
    out.push_back(Vec::Zero(1));
    return out;
  }
  double total = 1.0;
  for (Index i = 1; i < n; ++i) total *= grid;
  if (total <= static_cast<double>(max_points)) {
    const auto count = static_cast<std::size_t>(total);
    out.reserve(count);
    for (std::size_t flat = 0; flat < count; ++flat) {
      Vec theta = Vec::Zero(n);
      std::size_t rest = flat;
      for (Index i = n - 1; i >= 1; --i) {
        theta[i] = -M_PI + 2.0 * M_PI * static_cast<double>(rest % grid) / grid;
        rest /= grid;
      }
      out.push_back(theta);
    }
    return out;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  for (std::size_t k = 0; k < fallback; ++k) {
    Vec theta = Vec::Zero(n);
    for (Index i = 1; i < n; ++i) theta[i] = angle(rng);
    out.push_back(theta);
  }
  return out;
}

int cmd_check(const CommandOptions& opts) {
  return guarded(opts, [&](const ScenarioConfig& cfg) {
    const SystemParams& p = cfg.params;
    const SteadyStateMap ss(p, cfg.controller.omega0, cfg.controller.i_r_star);
    const std::uint64_t seed = opts.seed.value_or(cfg.seed);
    const std::vector<Vec> samples = check_samples(p.n(), cfg.check_grid, seed);
    const DissipationReport rep = check_dissipation(p, ss, samples);
    const double abscissa = spectral_abscissa(p);

    std::ostringstream os;
    os << std::setprecision(12);
    os << "scenario: " << cfg.name << '\n';
    os << "sylvester_residual: " << ss.sylvester_residual() << '\n';
    os << "spectral_abscissa: " << abscissa << '\n';
    os << "transient_hurwitz: " << (abscissa < 0.0 ? "pass" : "fail") << '\n';
    os << "samples: " << samples.size() << '\n';
    os << "dissipation_condition: " << (rep.pass ? "pass" : "fail") << '\n';
    os << "worst_margin: " << rep.worst_margin << '\n';
    os << "worst_theta: " << join(rep.worst_theta) << '\n';
    os << "routes_agree: " << (rep.routes_agree ? "true" : "false") << '\n';
    os << "max_route_gap: " << rep.max_route_gap << '\n';
    os << "min_damping: " << p.D.minCoeff() << '\n';

    *opts.out << os.str();
    std::ofstream f(output_path(opts, cfg.outputs.report));
    f << os.str();
    return rep.routes_agree ? static_cast<int>(ok) : static_cast<int>(runtime_failure);
  });
}

}  // namespace phsync::cli
