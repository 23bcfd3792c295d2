#pragma once

#include "phsync/model.hpp"

namespace phsync {

/// Constant matrices of x' = (J - R) grad H(x) + B u for the stacked state
/// x = (M omega, theta, lambda_r, lambda_s, C v, L_t i_t).
struct PHRealization {
  Mat J;
  Mat R;
  Mat B;
};

/// Machine and network vector field with currents derived from fluxes.
StateDerivative rhs_open_loop(const SystemParams& p, const State& x, const ControlInput& u);

PHRealization build_ph_realization(const SystemParams& p);

/// x = (M omega, theta, lambda_r, lambda_s, C v, L_t i_t).
Vec stacked_energy_state(const SystemParams& p, const State& x);
/// d/dt of stacked_energy_state given a StateDerivative.
Vec stacked_energy_rate(const SystemParams& p, const StateDerivative& dx);
/// grad H = (omega, tau_e, i_r, i_s, v, i_t).
Vec stacked_gradient(const CoEnergy& e);
Vec stacked_input(const ControlInput& u);

/// y = B^T grad H = (omega, i_r).
Vec passive_output(const SystemParams& p, const State& x);

/// dH/dt along the vector field, by the chain rule grad H . x'.
double hamiltonian_rate(const SystemParams& p, const State& x, const ControlInput& u);

/// grad H^T R grad H, the instantaneous dissipation.
double dissipation_rate(const SystemParams& p, const State& x);

}  // namespace phsync
