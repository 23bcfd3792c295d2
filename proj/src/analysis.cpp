#include "phsync/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "phsync/algebra.hpp"

namespace phsync {

Vec TildeState::electrical() const {
  Vec z(i_s.size() + v.size() + i_t.size());
  z << i_s, v, i_t;
  return z;
}

TildeState to_tilde(const SystemParams& p, const SteadyStateMap& ss, const State& x,
                    double theta0) {
  const Index n = p.n();
  const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
  const NetworkFlow f = network_flow(ss, p, x.theta);
  TildeState t;
  t.theta_dq = x.theta - Vec::Constant(n, theta0);
  t.omega = x.omega - Vec::Constant(n, ss.omega0());
  t.i_s = algebra::rotate_uniform(-theta0, cur.i_s - f.i_s);
  t.v = algebra::rotate_uniform(-theta0, x.v - f.v);
  t.i_t = algebra::rotate_uniform(-theta0, x.i_t - f.i_t);
  t.theta0 = theta0;
  return t;
}

State from_tilde(const SystemParams& p, const SteadyStateMap& ss, const TildeState& t,
                 const Vec& i_r) {
  const Index n = p.n();
  const Vec theta = t.theta_dq + Vec::Constant(n, t.theta0);
  const NetworkFlow f = network_flow(ss, p, theta);
  return state_from_currents(p, t.omega + Vec::Constant(n, ss.omega0()), theta, i_r,
                             algebra::rotate_uniform(t.theta0, t.i_s) + f.i_s,
                             algebra::rotate_uniform(t.theta0, t.v) + f.v,
                             algebra::rotate_uniform(t.theta0, t.i_t) + f.i_t);
}

State from_tilde(const SystemParams& p, const SteadyStateMap& ss, const TildeState& t) {
  return from_tilde(p, ss, t, ss.i_r_star());
}

double shifted_energy(const SystemParams& p, const PotentialEvaluator& ev, const TildeState& t) {
  double e = 0.5 * t.omega.dot(p.M.cwiseProduct(t.omega));
  for (Index i = 0; i < p.n(); ++i) {
    e += 0.5 * p.L_s[i] * t.i_s.segment(2 * i, 2).squaredNorm();
    e += 0.5 * p.C[i] * t.v.segment(2 * i, 2).squaredNorm();
  }
  for (Index k = 0; k < p.m(); ++k) e += 0.5 * p.L_t[k] * t.i_t.segment(2 * k, 2).squaredNorm();
  return e + ev.potential(t.theta_dq);
}

double hdot_quadratic_form(const SystemParams& p, const SteadyStateMap& ss, const Vec& theta_dq,
                           const TildeState& t) {
  const Vec z = t.electrical();
  double zkz = 0.0;
  for (Index i = 0; i < p.n(); ++i) {
    zkz += p.R_s[i] * t.i_s.segment(2 * i, 2).squaredNorm();
    zkz += p.G[i] * t.v.segment(2 * i, 2).squaredNorm();
  }
  for (Index k = 0; k < p.m(); ++k) zkz += p.R_t[k] * t.i_t.segment(2 * k, 2).squaredNorm();
  const Mat t12 = coupling_block(p, ss, theta_dq);
  return -(t.omega.dot(p.D.cwiseProduct(t.omega)) + 2.0 * t.omega.dot(t12 * z) + zkz);
}

TildeRate rhs_tilde(const SystemParams& p, const SteadyStateMap& ss,
                    const PotentialEvaluator& ev, const TildeState& t) {
  const Index m = p.m();
  const double w0 = ss.omega0();
  const Mat c = emf_direction(p, ss.i_r_star(), t.theta_dq);
  const Vec cw = c * t.omega;
  const Vec ynet_cw = ss.y_net() * cw;
  const Vec bus_ynet_cw = ss.bus_impedance() * ynet_cw;
  const ImpedanceSet& z = ss.impedances();
  const BlockMatrix big_e = algebra::kron_expand(p.incidence);

  TildeRate r;
  r.theta0 = w0;
  r.theta_dq = t.omega;
  r.omega = (-p.D.cwiseProduct(t.omega) + c.transpose() * t.i_s - ev.gradient(t.theta_dq))
                .cwiseQuotient(p.M);

  const Vec ls = algebra::kron_expand_diag(p.L_s).diagonal();
  r.i_s = (-z.Z_s * t.i_s + t.v - cw).cwiseQuotient(ls) + w0 * algebra::apply_j(ynet_cw);

  const Vec cap = algebra::kron_expand_diag(p.C).diagonal();
  Vec bus = -z.Y_c * t.v - t.i_s;
  if (m > 0) bus -= big_e * t.i_t;
  r.v = bus.cwiseQuotient(cap) - w0 * algebra::apply_j(bus_ynet_cw);

  if (m > 0) {
    const Vec lt = algebra::kron_expand_diag(p.L_t).diagonal();
    const Vec line_drive = z.Z_t.partialPivLu().solve(big_e.transpose() * bus_ynet_cw);
    r.i_t = (-z.Z_t * t.i_t + big_e.transpose() * t.v).cwiseQuotient(lt) -
            w0 * algebra::apply_j(line_drive);
  } else {
    r.i_t = Vec(0);
  }
  return r;
}

MachineCurrents current_rates(const SystemParams& p, const State& x, const StateDerivative& dx) {
  const Index n = p.n();
  const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
  // L(theta) d/dt (i_s, i_r) = d/dt (lambda_s, lambda_r) - (dL/dtheta theta') (i_s, i_r)
  Vec a = dx.lambda_s;
  Vec b = dx.lambda_r;
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(x.theta[i]), s = std::sin(x.theta[i]);
    const double k = p.L_m[i] * dx.theta[i];
    a[2 * i] -= -s * k * cur.i_r[i];
    a[2 * i + 1] -= c * k * cur.i_r[i];
    b[i] -= k * (-s * cur.i_s[2 * i] + c * cur.i_s[2 * i + 1]);
  }
  return currents_from_fluxes(p, x.theta, a, b);
}

TildeRate tilde_rate_from_full(const SystemParams& p, const SteadyStateMap& ss, const State& x,
                               const StateDerivative& dx, double theta0) {
  const Index n = p.n();
  const double w0 = ss.omega0();
  const TildeState t = to_tilde(p, ss, x, theta0);
  const MachineCurrents di = current_rates(p, x, dx);

  // d/dt pi_hat(theta) = Pi omega0 j c(theta) theta'
  const Vec flow_rate =
      ss.pi() * (w0 * algebra::apply_j(emf_direction(p, ss.i_r_star(), x.theta) * dx.theta));
  const Index ns = 2 * n, m2 = 2 * p.m();

  TildeRate r;
  r.theta0 = w0;
  r.theta_dq = dx.theta - Vec::Constant(n, w0);
  r.omega = dx.omega;
  r.i_s = -w0 * algebra::apply_j(t.i_s) +
          algebra::rotate_uniform(-theta0, di.i_s - flow_rate.head(ns));
  r.v = -w0 * algebra::apply_j(t.v) +
        algebra::rotate_uniform(-theta0, dx.v - flow_rate.segment(ns, ns));
  r.i_t = -w0 * algebra::apply_j(t.i_t) +
          algebra::rotate_uniform(-theta0, dx.i_t - flow_rate.tail(m2));
  return r;
}

ZeroDynamicsRate rhs_zero_dynamics(const SystemParams& p, const SteadyStateMap& ss,
                                   const Vec& xi_s, const Vec& z) {
  (void)p;
  const RegulatorSystem& reg = ss.regulator();
  ZeroDynamicsRate r;
  r.xi_s = ss.omega0() * algebra::apply_j(xi_s);
  r.z = (-reg.A * z + reg.P * xi_s).cwiseQuotient(reg.Q.diagonal());
  return r;
}

ZeroDynamicsRun simulate_zero_dynamics(const SystemParams& p, const SteadyStateMap& ss,
                                       const Vec& xi_s0, const Vec& z0, double t_end, double dt,
                                       double record_every) {
  if (!(dt > 0.0 && t_end > 0.0 && record_every > 0.0)) {
    throw std::invalid_argument("simulate_zero_dynamics: dt, t_end and record_every must be > 0");
  }
  const RegulatorSystem& reg = ss.regulator();
  const Index nx = xi_s0.size();
  Vec y(nx + z0.size());
  y << xi_s0, z0;

  auto f = [&](const Vec& s) {
    const ZeroDynamicsRate r = rhs_zero_dynamics(p, ss, s.head(nx), s.tail(z0.size()));
    Vec out(s.size());
    out << r.xi_s, r.z;
    return out;
  };
  ZeroDynamicsRun run;
  auto record = [&](double t) {
    const Vec err = y.tail(z0.size()) - ss.pi() * y.head(nx);
    run.t.push_back(t);
    run.error_norm.push_back(err.norm());
    run.lyapunov.push_back(0.5 * err.dot(reg.Q.diagonal().cwiseProduct(err)));
  };

  const auto steps = static_cast<long>(std::llround(t_end / dt));
  const long every = std::max(1L, static_cast<long>(std::llround(record_every / dt)));
  record(0.0);
  for (long k = 1; k <= steps; ++k) {
    const Vec k1 = f(y);
    const Vec k2 = f(y + 0.5 * dt * k1);
    const Vec k3 = f(y + 0.5 * dt * k2);
    const Vec k4 = f(y + dt * k3);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (k % every == 0 || k == steps) record(k * dt);
  }
  return run;
}

BoundednessReport boundedness_probe(const SystemParams& p, const std::vector<State>& states,
                                    double rel_tol) {
  BoundednessReport report;
  const char* names[] = {"i_r", "psi", "lambda_s", "v", "i_t", "omega"};
  const std::size_t count = states.size();
  if (count == 0) {
    for (const char* name : names) report.quantities.push_back({name});
    return report;
  }
  const std::size_t decile_start = count - std::max<std::size_t>(1, count / 10);

  std::vector<std::array<double, 6>> norms;
  norms.reserve(count);
  for (const State& x : states) {
    const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
    // psi = R_theta (L_m (x) e1) i_r has norm ||L_m i_r||
    norms.push_back({cur.i_r.norm(), p.L_m.cwiseProduct(cur.i_r).norm(), x.lambda_s.norm(),
                     x.v.norm(), x.i_t.norm(), x.omega.norm()});
  }
  for (std::size_t q = 0; q < 6; ++q) {
    BoundednessReport::Quantity out{names[q]};
    for (std::size_t k = 0; k < count; ++k) {
      const double v = norms[k][q];
      out.max_norm = std::max(out.max_norm, v);
      if (k >= decile_start) {
        out.last_decile_max = std::max(out.last_decile_max, v);
      } else {
        out.earlier_max = std::max(out.earlier_max, v);
      }
    }
    out.growing = decile_start > 0 &&
                  out.last_decile_max > (1.0 + rel_tol) * out.earlier_max + 1e-300;
    report.growth_flag = report.growth_flag || out.growing;
    report.quantities.push_back(out);
  }
  return report;
}

}  // namespace phsync
