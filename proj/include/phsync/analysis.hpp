#pragma once

#include <vector>

#include "phsync/control.hpp"

namespace phsync {

/// Coordinates relative to the steady flow, expressed in the frame rotating
/// with the auxiliary angle theta0.
struct TildeState {
  Vec theta_dq;  // theta - theta0 1
  Vec omega;     // omega - omega0 1
  Vec i_s;       // 2n
  Vec v;         // 2n
  Vec i_t;       // 2m
  double theta0 = 0.0;

  Vec electrical() const;  // (i_s, v, i_t)
};

using TildeRate = TildeState;

TildeState to_tilde(const SystemParams& p, const SteadyStateMap& ss, const State& x,
                    double theta0);

/// Inverse of to_tilde for a given rotor current (i_r* on the set where the
/// rotor currents have converged).
State from_tilde(const SystemParams& p, const SteadyStateMap& ss, const TildeState& t,
                 const Vec& i_r);
State from_tilde(const SystemParams& p, const SteadyStateMap& ss, const TildeState& t);

/// 1/2 w^T M w + 1/2 z^T Q z + S(theta_dq).
double shifted_energy(const SystemParams& p, const PotentialEvaluator& ev, const TildeState& t);

/// -(w, z)^T [[D, T12], [T12^T, blkdiag(R_s, G, R_t)]] (w, z) with T12 taken at theta_dq.
double hdot_quadratic_form(const SystemParams& p, const SteadyStateMap& ss, const Vec& theta_dq,
                           const TildeState& t);

/// Closed loop under the energy-based feedback with i_r = i_r*, written in
/// tilde coordinates.
TildeRate rhs_tilde(const SystemParams& p, const SteadyStateMap& ss,
                    const PotentialEvaluator& ev, const TildeState& t);

/// Pushes a full-state rate dx at x through the differential of to_tilde.
TildeRate tilde_rate_from_full(const SystemParams& p, const SteadyStateMap& ss, const State& x,
                               const StateDerivative& dx, double theta0);

/// Current rates (di_s/dt, di_r/dt) implied by flux rates along dx.
MachineCurrents current_rates(const SystemParams& p, const State& x, const StateDerivative& dx);

// Electrical subsystem driven by the steady EMF (omega = omega0 1, i_r = i_r*).

struct ZeroDynamicsRate {
  Vec xi_s;  // 2n
  Vec z;     // (i_s, v, i_t)
};

ZeroDynamicsRate rhs_zero_dynamics(const SystemParams& p, const SteadyStateMap& ss,
                                   const Vec& xi_s, const Vec& z);

struct ZeroDynamicsRun {
  std::vector<double> t;
  std::vector<double> error_norm;  // ||z - Pi xi_s||
  std::vector<double> lyapunov;    // 1/2 z~^T Q z~
};

/// Fixed-step RK4 integration of the exosystem-driven electrical subsystem.
ZeroDynamicsRun simulate_zero_dynamics(const SystemParams& p, const SteadyStateMap& ss,
                                       const Vec& xi_s0, const Vec& z0, double t_end, double dt,
                                       double record_every);

struct BoundednessReport {
  struct Quantity {
    const char* name;
    double max_norm = 0.0;
    double last_decile_max = 0.0;
    double earlier_max = 0.0;
    bool growing = false;
  };
  std::vector<Quantity> quantities;  // i_r, psi, lambda_s, v, i_t, omega
  bool growth_flag = false;
};

/// Max norms over the run; a quantity is flagged when its last-decile
/// maximum exceeds the maximum over the preceding samples by more than
/// rel_tol.
BoundednessReport boundedness_probe(const SystemParams& p, const std::vector<State>& states,
                                    double rel_tol = 5e-2);

}  // namespace phsync
