#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phsync/potential.hpp"

namespace phsync {

enum class ControllerKind {
  open_loop_constant,
  omega_invariance,
  steady_state,
  mmsf_energy,
  mmsf_highgain,
};

const char* to_string(ControllerKind k);
/// Throws std::invalid_argument for unknown names.
ControllerKind controller_kind_from_string(const std::string& name);

struct ControllerSpec {
  ControllerKind kind = ControllerKind::mmsf_energy;
  double omega0 = 0.0;  // rad/s
  Vec i_r_star;         // A
  std::optional<Vec> theta_dq;                 // steady_state kind
  std::optional<ControlInput> constant_input;  // open_loop_constant kind

  /// omega0 > 0, i_r* finite and non-negative with n entries, kind-specific
  /// fields present.
  void validate(Index n) const;
};

/// Feedback that keeps {omega = omega0 1, i_r = i_r*} invariant.
ControlInput u_omega(const SystemParams& p, const State& x, const ControllerSpec& spec);

/// Constant input that keeps the steady flow through theta_dq invariant:
/// u_r = R_r i_r*, u_m = (D + K_net(theta_dq)) omega0 1.
ControlInput u_star(const SteadyStateMap& ss, const SystemParams& p, const Vec& theta_dq,
                    const ControllerSpec& spec);

/// Angle-dependent torque D omega0 1 + active part of K_net(theta) omega0 1.
/// Coincides with the steady-state torque exactly at critical points of S.
Vec critical_point_torque(const PotentialEvaluator& ev, const SystemParams& p,
                          const Vec& theta);

/// Energy-based synchronizing feedback.
///
/// u_m = D omega0 1 - I_r* (L_m (x) e2^T) R^T i_s_hat(theta) - grad S(theta)
/// u_r = R_r i_r* + xi_r
///
/// xi_r is obtained causally from the rotor dynamics the feedback assigns,
/// L_r di_r/dt = -R_r (i_r - i_r*): that rate fixes the stator EMF, the
/// stator flux equation then fixes di_s/dt, and xi_r follows.
ControlInput u_mmsf_energy(const SystemParams& p, const SteadyStateMap& ss,
                           const PotentialEvaluator& ev, const State& x,
                           const ControllerSpec& spec);

/// High-gain variant: same u_r, u_m = critical_point_torque(theta) + S_m
/// with S_m = -I_r* (L_m (x) e2^T) R^T (i_s - i_s_hat(theta)).
ControlInput u_mmsf_highgain(const SystemParams& p, const SteadyStateMap& ss,
                             const PotentialEvaluator& ev, const State& x,
                             const ControllerSpec& spec);

/// Rotor-current rate assigned by the MMSF feedbacks.
Vec assigned_rotor_current_rate(const SystemParams& p, const Vec& i_r, const Vec& i_r_star);

/// Baseline excitation reference i_r* = e0 / (omega0 L_m) for a common EMF
/// amplitude e0.
Vec rotor_current_for_emf(const SystemParams& p, double omega0, double e0);

/// Cross-coupling block T12(theta_dq) (n x (4n + 2m)) of the shifted-energy
/// dissipation form.
Mat coupling_block(const SystemParams& p, const SteadyStateMap& ss, const Vec& theta_dq);

struct DissipationSample {
  Vec theta;
  double margin_sufficient;  // min eig of D - 1/4 omega0^2 c^T Pi^T Q^2 K^-1 Pi c
  double margin_schur;       // min eig of D - T12 K^-1 T12^T
};

struct DissipationReport {
  double worst_margin = 0.0;
  Vec worst_theta;
  bool pass = false;
  bool routes_agree = true;
  double max_route_gap = 0.0;
  std::vector<DissipationSample> samples;
};

/// Evaluates the damping condition at every sample. Failure is reported,
/// not thrown. Throws std::invalid_argument for an empty sample set.
DissipationReport check_dissipation(const SystemParams& p, const SteadyStateMap& ss,
                                    const std::vector<Vec>& theta_samples);

/// Binds a ControllerSpec to the steady-state machinery it needs, built once.
class Controller {
 public:
  Controller(const SystemParams& p, ControllerSpec spec);

  ControlInput operator()(const State& x) const;

  const ControllerSpec& spec() const { return spec_; }
  const SteadyStateMap& steady_state_map() const { return *ss_; }
  const PotentialEvaluator& potential() const { return *ev_; }

 private:
  SystemParams params_;
  ControllerSpec spec_;
  std::shared_ptr<const SteadyStateMap> ss_;
  std::shared_ptr<const PotentialEvaluator> ev_;
  ControlInput fixed_;  // steady_state and open_loop_constant kinds
};

}  // namespace phsync
