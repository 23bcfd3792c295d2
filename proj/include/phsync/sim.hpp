#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phsync/analysis.hpp"

namespace phsync {

enum class IntegrationMethod { rk4_fixed, rk45_adaptive };

const char* to_string(IntegrationMethod m);
IntegrationMethod integration_method_from_string(const std::string& name);

struct IntegratorConfig {
  IntegrationMethod method = IntegrationMethod::rk4_fixed;
  double dt = 2e-6;  // rk4_fixed step; initial step for rk45_adaptive
  double rtol = 1e-8;
  double atol = 1e-6;
  double dt_min = 1e-12;
  double dt_max = 1e-3;
  double t_end = 1.0;
  double record_every = 1e-3;
  bool allow_large_dt = false;

  void validate() const;
};

/// Thrown for configurations rejected before integration starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Diagnostics {
  double H = 0.0;
  double H_tilde = 0.0;
  double S = 0.0;
  double err_omega = 0.0;  // ||omega - omega0 1||
  double err_ir = 0.0;     // ||i_r - i_r*||
  Vec theta_dq;            // wrapped to [-pi, pi)
  Vec pairwise;            // theta_i - theta_j for i < j, wrapped
};

enum class SimulationStatus { completed, non_finite_state, step_underflow };
const char* to_string(SimulationStatus s);

struct Trajectory {
  std::vector<double> t;
  std::vector<State> states;
  std::vector<ControlInput> inputs;
  std::vector<Diagnostics> diagnostics;

  SimulationStatus status = SimulationStatus::completed;
  double failure_time = 0.0;
  std::string message;
  long steps = 0;

  bool ok() const { return status == SimulationStatus::completed; }
  std::size_t size() const { return t.size(); }
};

/// Diagnostics of a single sample, with the auxiliary angle theta0 = omega0 t.
Diagnostics compute_diagnostics(const SystemParams& p, const Controller& ctrl, const State& x,
                                double t);

/// Integrates x' = f(x, u(x)) from x0 at t = 0. Samples are recorded at t = 0
/// and every record_every seconds. Throws ConfigError for rk4_fixed steps
/// above 0.2 x the fastest electrical time constant unless allow_large_dt is
/// set. Non-finite states and adaptive step underflow end the run early with
/// the samples recorded so far.
Trajectory simulate(const SystemParams& p, const Controller& ctrl, const State& x0,
                    const IntegratorConfig& cfg);
Trajectory simulate(const SystemParams& p, const ControllerSpec& spec, const State& x0,
                    const IntegratorConfig& cfg);

enum class InitialKind { zero, on_gamma, custom };
const char* to_string(InitialKind k);
InitialKind initial_kind_from_string(const std::string& name);

struct InitialSpec {
  InitialKind kind = InitialKind::zero;
  Vec theta_dq;  // on_gamma
  // custom, given as currents
  Vec omega, theta, i_r, i_s, v, i_t;
};

/// on_gamma: omega = omega0 1, i_r = i_r*, (i_s, v, i_t) the steady flow at
/// theta_dq, fluxes from currents. `ss` may be null for the other kinds.
State build_initial_state(const SystemParams& p, const SteadyStateMap* ss,
                          const InitialSpec& spec);

/// "t,omega_1..n,theta_1..n,i_r_1..n,i_s_1..2n,v_1..2n,i_t_1..2m,u_m_1..n,
/// u_r_1..n,H,H_tilde,S,err_omega,err_ir,theta_dq_1..n"
std::string trajectory_csv_header(const SystemParams& p);
void write_trajectory_csv(std::ostream& os, const SystemParams& p, const Trajectory& traj);

/// Checks that H_tilde does not increase between consecutive samples by more
/// than slack * |H_tilde| once ||i_r - i_r*|| <= ir_rel * ||i_r*||.
struct MonotonicityVerdict {
  bool non_increasing = true;
  std::size_t first_index = 0;   // first sample inside the window
  bool window_reached = false;
  double worst_increase = 0.0;   // max (H_tilde[k+1] - H_tilde[k]) / H_tilde[k]
  double worst_time = 0.0;
};
MonotonicityVerdict shifted_energy_monotonicity(const Trajectory& traj, const Vec& i_r_star,
                                                double ir_rel = 1e-3, double slack = 1e-6);

}  // namespace phsync
