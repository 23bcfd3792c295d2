#pragma once

#include <algorithm>

#include "phsync/model.hpp"

namespace phsync {

/// Phasor impedances at the synchronous frequency omega0, all in the real
/// 2x2-block embedding.
struct ImpedanceSet {
  BlockMatrix Z_s;      // R_s + j omega0 L_s      (2n x 2n)
  BlockMatrix Y_c;      // G + j omega0 C          (2n x 2n)
  BlockMatrix Z_t;      // R_t + j omega0 L_t      (2m x 2m)
  BlockMatrix L_t_lap;  // E Z_t^{-1} E^T          (2n x 2n)
};

ImpedanceSet build_impedances(const SystemParams& p, double omega0);

/// Matrices of the electrical subsystem on the zero-dynamics manifold,
/// Q z' = -A z + P xi_s with z = (i_s, v, i_t).
struct RegulatorSystem {
  Mat A;  // [[R_s, -I, 0], [I, G, E], [0, -E^T, R_t]]
  Mat Q;  // blkdiag(L_s, C, L_t)
  Mat P;  // (-I, 0, 0)
};

RegulatorSystem build_regulator_system(const SystemParams& p);

/// Eigenvalues of -Q^{-1} A.
Eigen::VectorXcd transient_eigenvalues(const SystemParams& p);
double spectral_abscissa(const SystemParams& p);
/// 1 / max |Re lambda| over the transient spectrum.
double fastest_time_constant(const SystemParams& p);
/// 1 / min |Re lambda| over the transient spectrum.
double slowest_time_constant(const SystemParams& p);

/// Solution of the regulator equation Q Pi S + A Pi = P with S = omega0 j,
/// together with the equivalent admittance seen by the stator EMFs.
///
/// Immutable after construction.
class SteadyStateMap {
 public:
  SteadyStateMap(const SystemParams& p, double omega0, Vec i_r_star);

  Index n() const { return n_; }
  Index m() const { return m_; }
  double omega0() const { return omega0_; }
  const Vec& i_r_star() const { return i_r_star_; }

  /// (4n + 2m) x 2n, rows ordered (i_s, v, i_t).
  const Mat& pi() const { return pi_; }
  auto pi_stator() const { return pi_.topRows(2 * n_); }
  auto pi_bus() const { return pi_.middleRows(2 * n_, 2 * n_); }
  auto pi_line() const { return pi_.bottomRows(2 * m_); }

  /// (Z_s + (Y_c + L_t_lap)^{-1})^{-1}.
  const BlockMatrix& y_net() const { return y_net_; }
  /// (Y_c + L_t_lap)^{-1}.
  const BlockMatrix& bus_impedance() const { return bus_impedance_; }
  const ImpedanceSet& impedances() const { return impedances_; }
  const RegulatorSystem& regulator() const { return regulator_; }

  /// ||Q Pi S + A Pi - P||_F / ||P||_F.
  double sylvester_residual() const;
  /// Reciprocal condition estimate of A + omega0 j Q.
  double rcond() const { return rcond_; }

 private:
  Index n_ = 0;
  Index m_ = 0;
  double omega0_ = 0.0;
  Vec i_r_star_;
  ImpedanceSet impedances_;
  RegulatorSystem regulator_;
  Mat pi_;
  BlockMatrix y_net_;
  BlockMatrix bus_impedance_;
  double rcond_ = 0.0;
};

SteadyStateMap solve_pi(const SystemParams& p, double omega0, const Vec& i_r_star);

/// R_theta (L_m (x) e2) I_r*, the map from per-machine speed to stator EMF
/// at constant rotor current (2n x n).
Mat emf_direction(const SystemParams& p, const Vec& i_r_star, const Vec& theta);

/// Steady stator EMF R_theta (L_m (x) e2) i_r* omega0.
Vec steady_emf(const SystemParams& p, const SteadyStateMap& ss, const Vec& theta);

/// Steady phasor state on the attractive set, as a function of rotor angles.
struct NetworkFlow {
  Vec i_s;  // 2n
  Vec v;    // 2n
  Vec i_t;  // 2m

  Vec stacked() const;
};

NetworkFlow network_flow(const SteadyStateMap& ss, const SystemParams& p, const Vec& theta);

/// I_r* (L_m (x) e2^T) R_theta^T Y_net R_theta (L_m (x) e2) I_r*.
Mat k_net(const SteadyStateMap& ss, const SystemParams& p, const Vec& theta);

/// K_net(theta) omega0 1.
Vec steady_state_torque(const SteadyStateMap& ss, const SystemParams& p, const Vec& theta);

/// i_s^T R_s i_s + v^T G v + i_t^T R_t i_t on the steady flow.
double steady_state_losses(const SteadyStateMap& ss, const SystemParams& p, const Vec& theta);

/// Relative residuals of the stator, bus (current balance) and line phasor
/// relations satisfied by the steady flow.
struct PhasorResiduals {
  double stator = 0.0;
  double bus = 0.0;
  double line = 0.0;
  double max() const { return std::max({stator, bus, line}); }
};

PhasorResiduals phasor_residuals(const SteadyStateMap& ss, const SystemParams& p,
                                 const Vec& theta);

}  // namespace phsync
