#include "phsync/control.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "phsync/algebra.hpp"

namespace phsync {

const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::open_loop_constant: return "open_loop_constant";
    case ControllerKind::omega_invariance: return "omega_invariance";
    case ControllerKind::steady_state: return "steady_state";
    case ControllerKind::mmsf_energy: return "mmsf_energy";
    case ControllerKind::mmsf_highgain: return "mmsf_highgain";
  }
  return "unknown";
}

ControllerKind controller_kind_from_string(const std::string& name) {
  for (auto k : {ControllerKind::open_loop_constant, ControllerKind::omega_invariance,
                 ControllerKind::steady_state, ControllerKind::mmsf_energy,
                 ControllerKind::mmsf_highgain}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown controller kind '" + name + "'");
}

void ControllerSpec::validate(Index n) const {
  if (!(std::isfinite(omega0) && omega0 > 0.0)) throw ParameterError("omega0 must be > 0");
  if (i_r_star.size() != n) throw ParameterError("i_r_star must have one entry per machine");
  for (Index i = 0; i < n; ++i) {
    if (!(std::isfinite(i_r_star[i]) && i_r_star[i] >= 0.0)) {
      throw ParameterError("i_r_star entries must be finite and >= 0");
    }
  }
  if (kind == ControllerKind::steady_state) {
    if (!theta_dq || theta_dq->size() != n) {
      throw ParameterError("steady_state controller needs theta_dq with one entry per machine");
    }
  }
  if (kind == ControllerKind::open_loop_constant) {
    if (!constant_input || constant_input->u_m.size() != n || constant_input->u_r.size() != n) {
      throw ParameterError("open_loop_constant controller needs u_m and u_r per machine");
    }
  }
}

ControlInput u_omega(const SystemParams& p, const State& x, const ControllerSpec& spec) {
  const Index n = p.n();
  const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
  const double w0 = spec.omega0;
  ControlInput u{Vec(n), Vec(n)};
  for (Index i = 0; i < n; ++i) {
    const double a = cur.i_s[2 * i], b = cur.i_s[2 * i + 1];
    // L_s^{-1} (-Z_s i_s + v), Z_s = R_s + j omega0 L_s
    const double wa = (-p.R_s[i] * a + w0 * p.L_s[i] * b + x.v[2 * i]) / p.L_s[i];
    const double wb = (-p.R_s[i] * b - w0 * p.L_s[i] * a + x.v[2 * i + 1]) / p.L_s[i];
    const double c = std::cos(x.theta[i]), s = std::sin(x.theta[i]);
    u.u_r[i] = p.R_r[i] * spec.i_r_star[i] + p.L_m[i] * (c * wa + s * wb);
  }
  u.u_m = p.D * w0 + electrical_torque(p, x.theta, spec.i_r_star, cur.i_s);
  return u;
}

ControlInput u_star(const SteadyStateMap& ss, const SystemParams& p, const Vec& theta_dq,
                    const ControllerSpec& spec) {
  const Index n = p.n();
  ControlInput u;
  u.u_r = p.R_r.cwiseProduct(spec.i_r_star);
  u.u_m = (Mat(p.D.asDiagonal()) + k_net(ss, p, theta_dq)) * Vec::Constant(n, ss.omega0());
  return u;
}

Vec critical_point_torque(const PotentialEvaluator& ev, const SystemParams& p,
                          const Vec& theta) {
  return p.D * ev.omega0() + ev.active_torque(theta);
}

Vec assigned_rotor_current_rate(const SystemParams& p, const Vec& i_r, const Vec& i_r_star) {
  return -(p.R_r.cwiseProduct(i_r - i_r_star)).cwiseQuotient(p.L_r);
}

namespace {

Vec rotor_regulating_voltage(const SystemParams& p, const State& x, const MachineCurrents& cur,
                             const Vec& i_r_star) {
  const Index n = p.n();
  const Vec di_r = assigned_rotor_current_rate(p, cur.i_r, i_r_star);
  const Vec xi_s = stator_emf(p, x.theta, x.omega, cur.i_r, di_r);
  Vec di_s(2 * n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < 2; ++k) {
      const Index a = 2 * i + k;
      di_s[a] = (-p.R_s[i] * cur.i_s[a] + x.v[a] - xi_s[a]) / p.L_s[i];
    }
  }
  return p.R_r.cwiseProduct(i_r_star) + rotor_emf(p, x.theta, x.omega, cur.i_s, di_s);
}

}  // namespace

ControlInput u_mmsf_energy(const SystemParams& p, const SteadyStateMap& ss,
                           const PotentialEvaluator& ev, const State& x,
                           const ControllerSpec& spec) {
  const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
  const Vec is_hat = ss.pi_stator() * steady_emf(p, ss, x.theta);
  ControlInput u;
  u.u_r = rotor_regulating_voltage(p, x, cur, spec.i_r_star);
  u.u_m = p.D * spec.omega0 + electrical_torque(p, x.theta, spec.i_r_star, is_hat) -
          ev.gradient(x.theta);
  return u;
}

ControlInput u_mmsf_highgain(const SystemParams& p, const SteadyStateMap& ss,
                             const PotentialEvaluator& ev, const State& x,
                             const ControllerSpec& spec) {
  const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
  const Vec is_hat = ss.pi_stator() * steady_emf(p, ss, x.theta);
  ControlInput u;
  u.u_r = rotor_regulating_voltage(p, x, cur, spec.i_r_star);
  u.u_m = critical_point_torque(ev, p, x.theta) +
          electrical_torque(p, x.theta, spec.i_r_star, cur.i_s - is_hat);
  return u;
}

Vec rotor_current_for_emf(const SystemParams& p, double omega0, double e0) {
  return (Vec::Constant(p.n(), e0)).cwiseQuotient(p.L_m * omega0);
}

Mat coupling_block(const SystemParams& p, const SteadyStateMap& ss, const Vec& theta_dq) {
  const Index n = p.n(), m = p.m();
  const double w0 = ss.omega0();
  const Mat c = emf_direction(p, ss.i_r_star(), theta_dq);
  const Mat ynet_c = ss.y_net() * c;
  const Mat bus_ynet_c = ss.bus_impedance() * ynet_c;
  const BlockMatrix jn = algebra::kron_j(n);

  Mat t12t(4 * n + 2 * m, n);
  t12t.topRows(2 * n) = -w0 * algebra::kron_expand_diag(p.L_s) * jn * ynet_c;
  t12t.middleRows(2 * n, 2 * n) =
      w0 * algebra::kron_expand_diag(p.C) * jn * bus_ynet_c;
  if (m > 0) {
    const Mat line = ss.impedances().Z_t.partialPivLu().solve(
        algebra::kron_expand(p.incidence).transpose() * bus_ynet_c);
    t12t.bottomRows(2 * m) = w0 * algebra::kron_expand_diag(p.L_t) * algebra::kron_j(m) * line;
  }
  return 0.5 * t12t.transpose();
}

DissipationReport check_dissipation(const SystemParams& p, const SteadyStateMap& ss,
                                    const std::vector<Vec>& theta_samples) {
  if (theta_samples.empty()) throw std::invalid_argument("check_dissipation: no samples");
  const double w0 = ss.omega0();
  const RegulatorSystem& reg = ss.regulator();
  const Index size = reg.Q.rows();

  Vec k_diag(size);
  k_diag << algebra::kron_expand_diag(p.R_s).diagonal(), algebra::kron_expand_diag(p.G).diagonal(),
      algebra::kron_expand_diag(p.R_t).diagonal();
  const Vec q_diag = reg.Q.diagonal();
  const Vec q2_over_k = q_diag.cwiseProduct(q_diag).cwiseQuotient(k_diag);
  const Mat sufficient_kernel = ss.pi().transpose() * q2_over_k.asDiagonal() * ss.pi();
  const Mat d = p.D.asDiagonal();
  const Vec k_inv = k_diag.cwiseInverse();

  auto min_eig = [](const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  };

  DissipationReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  const double scale = p.D.maxCoeff();
  for (const Vec& theta : theta_samples) {
    const Mat c = emf_direction(p, ss.i_r_star(), theta);
    const Mat m24 = d - 0.25 * w0 * w0 * c.transpose() * sufficient_kernel * c;
    const Mat t12 = coupling_block(p, ss, theta);
    const Mat m29 = d - t12 * k_inv.asDiagonal() * t12.transpose();
    DissipationSample s{theta, min_eig(m24), min_eig(m29)};
    const double gap = std::abs(s.margin_sufficient - s.margin_schur);
    report.max_route_gap = std::max(report.max_route_gap, gap);
    const bool same_sign = (s.margin_sufficient > 0) == (s.margin_schur > 0);
    if (!same_sign && gap > 1e-10 * scale) report.routes_agree = false;
    if (s.margin_schur < report.worst_margin) {
      report.worst_margin = s.margin_schur;
      report.worst_theta = theta;
    }
    report.samples.push_back(std::move(s));
  }
  report.pass = report.worst_margin > 0.0;
  return report;
}

Controller::Controller(const SystemParams& p, ControllerSpec spec)
    : params_(p), spec_(std::move(spec)) {
  spec_.validate(p.n());
  ss_ = std::make_shared<const SteadyStateMap>(p, spec_.omega0, spec_.i_r_star);
  ev_ = std::make_shared<const PotentialEvaluator>(p, *ss_);
  if (spec_.kind == ControllerKind::steady_state) {
    fixed_ = u_star(*ss_, p, *spec_.theta_dq, spec_);
  } else if (spec_.kind == ControllerKind::open_loop_constant) {
    fixed_ = *spec_.constant_input;
  }
}

ControlInput Controller::operator()(const State& x) const {
  switch (spec_.kind) {
    case ControllerKind::open_loop_constant:
    case ControllerKind::steady_state:
      return fixed_;
    case ControllerKind::omega_invariance:
      return u_omega(params_, x, spec_);
    case ControllerKind::mmsf_energy:
      return u_mmsf_energy(params_, *ss_, *ev_, x, spec_);
    case ControllerKind::mmsf_highgain:
      return u_mmsf_highgain(params_, *ss_, *ev_, x, spec_);
  }
  throw std::logic_error("unhandled controller kind");
}

}  // namespace phsync
