#pragma once

#include "phsync/types.hpp"

namespace phsync {

/// Physical constants of an n-machine, n-bus, m-line system (SI units).
///
/// Per-machine vectors have length n, per-bus vectors length n (every bus
/// hosts exactly one generator), per-line vectors length m. The incidence
/// matrix is n x m with one +1 and one -1 per column.
struct SystemParams {
  Mat incidence;

  Vec M;    // rotor inertia, kg m^2
  Vec D;    // rotor damping, N m s
  Vec L_r;  // rotor self-inductance, H
  Vec R_r;  // rotor resistance, Ohm
  Vec L_m;  // mutual inductance, H
  Vec L_s;  // stator self-inductance, H
  Vec R_s;  // stator resistance, Ohm

  Vec C;    // bus capacitance, F
  Vec G;    // load conductance, S

  Vec L_t;  // line inductance, H
  Vec R_t;  // line resistance, Ohm

  Index n() const { return M.size(); }
  Index m() const { return incidence.cols(); }

  /// Throws ParameterError on the first violated assumption: dimensions,
  /// strict positivity, L_s L_r > L_m^2, signed incidence, connectivity.
  void validate() const;
};

/// Flux-coordinate system state. Angles are unwrapped.
struct State {
  Vec omega;     // n, rad/s
  Vec theta;     // n, rad
  Vec lambda_r;  // n, Wb
  Vec lambda_s;  // 2n, Wb
  Vec v;         // 2n, V
  Vec i_t;       // 2m, A

  static State zeros(const SystemParams& p);

  /// Stacked (omega, theta, lambda_r, lambda_s, v, i_t).
  Vec pack() const;
  static State unpack(const SystemParams& p, const Vec& x);
  static Index packed_size(const SystemParams& p) { return 7 * p.n() + 2 * p.m(); }
};

// Time derivative of State, in the same coordinates.
using StateDerivative = State;

/// Co-energy variables, i.e. the gradient of the Hamiltonian.
struct CoEnergy {
  Vec omega;
  Vec tau_e;
  Vec i_r;
  Vec i_s;
  Vec v;
  Vec i_t;
};

struct ControlInput {
  Vec u_m;  // mechanical torque, N m
  Vec u_r;  // excitation voltage, V
};

struct MachineCurrents {
  Vec i_s;  // 2n
  Vec i_r;  // n
};

struct MachineFluxes {
  Vec lambda_s;  // 2n
  Vec lambda_r;  // n
};

/// L_theta of all machines, ordered (stator alpha-beta of all machines,
/// then rotor of all machines): 3n x 3n, symmetric positive definite.
Mat machine_inductance(const SystemParams& p, const Vec& theta);

/// Solves L_theta (i_s, i_r) = (lambda_s, lambda_r).
MachineCurrents currents_from_fluxes(const SystemParams& p, const Vec& theta, const Vec& lambda_s,
                                     const Vec& lambda_r);

MachineFluxes fluxes_from_currents(const SystemParams& p, const Vec& theta, const Vec& i_s,
                                   const Vec& i_r);

/// Air-gap torque tau_e = -I_r (L_m (x) e2^T) R_theta^T i_s.
Vec electrical_torque(const SystemParams& p, const Vec& theta, const Vec& i_r, const Vec& i_s);

/// EMF induced in the stator: d/dt (R_theta (L_m (x) e1) i_r), expanded with
/// theta' = omega.
Vec stator_emf(const SystemParams& p, const Vec& theta, const Vec& omega, const Vec& i_r,
               const Vec& di_r_dt);

/// EMF induced in the rotor: d/dt ((L_m (x) e1^T) R_theta^T i_s).
Vec rotor_emf(const SystemParams& p, const Vec& theta, const Vec& omega, const Vec& i_s,
              const Vec& di_s_dt);

/// 1/2 lambda^T L_theta^{-1} lambda.
double magnetic_energy(const SystemParams& p, const Vec& theta, const Vec& lambda_s,
                       const Vec& lambda_r);

/// Kinetic + magnetic + capacitor + line-inductor energy, J.
double hamiltonian(const SystemParams& p, const State& x);

/// Gradient of the Hamiltonian with respect to (M omega, theta, lambda_r,
/// lambda_s, C v, L_t i_t).
CoEnergy co_energy(const SystemParams& p, const State& x);

/// Builds a flux-coordinate state from currents.
State state_from_currents(const SystemParams& p, const Vec& omega, const Vec& theta,
                          const Vec& i_r, const Vec& i_s, const Vec& v, const Vec& i_t);

}  // namespace phsync
