#include "phsync/dynamics.hpp"

#include "phsync/algebra.hpp"

namespace phsync {

namespace {

// (E (x) I2) i_t
Vec incidence_times(const Mat& e, const Vec& i_t) {
  Vec out = Vec::Zero(2 * e.rows());
  for (Index c = 0; c < e.cols(); ++c) {
    for (Index r = 0; r < e.rows(); ++r) {
      const double w = e(r, c);
      if (w == 0.0) continue;
      out[2 * r] += w * i_t[2 * c];
      out[2 * r + 1] += w * i_t[2 * c + 1];
    }
  }
  return out;
}

// (E (x) I2)^T v
Vec incidence_transpose_times(const Mat& e, const Vec& v) {
  Vec out = Vec::Zero(2 * e.cols());
  for (Index c = 0; c < e.cols(); ++c) {
    for (Index r = 0; r < e.rows(); ++r) {
      const double w = e(r, c);
      if (w == 0.0) continue;
      out[2 * c] += w * v[2 * r];
      out[2 * c + 1] += w * v[2 * r + 1];
    }
  }
  return out;
}

}  // namespace

StateDerivative rhs_open_loop(const SystemParams& p, const State& x, const ControlInput& u) {
  const Index n = p.n(), m = p.m();
  const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
  const Vec tau = electrical_torque(p, x.theta, cur.i_r, cur.i_s);

  StateDerivative dx;
  dx.omega = (-p.D.cwiseProduct(x.omega) - tau + u.u_m).cwiseQuotient(p.M);
  dx.theta = x.omega;
  dx.lambda_r = -p.R_r.cwiseProduct(cur.i_r) + u.u_r;

  dx.lambda_s.resize(2 * n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < 2; ++k) {
      dx.lambda_s[2 * i + k] = -p.R_s[i] * cur.i_s[2 * i + k] + x.v[2 * i + k];
    }
  }

  const Vec e_it = incidence_times(p.incidence, x.i_t);
  dx.v.resize(2 * n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < 2; ++k) {
      const Index a = 2 * i + k;
      dx.v[a] = (-p.G[i] * x.v[a] - e_it[a] - cur.i_s[a]) / p.C[i];
    }
  }

  const Vec et_v = incidence_transpose_times(p.incidence, x.v);
  dx.i_t.resize(2 * m);
  for (Index e = 0; e < m; ++e) {
    for (Index k = 0; k < 2; ++k) {
      const Index a = 2 * e + k;
      dx.i_t[a] = (-p.R_t[e] * x.i_t[a] + et_v[a]) / p.L_t[e];
    }
  }
  return dx;
}

PHRealization build_ph_realization(const SystemParams& p) {
  const Index n = p.n(), m = p.m();
  const Index size = 7 * n + 2 * m;
  // block offsets: momentum, angle, rotor flux, stator flux, charge, line flux
  const Index op = 0, oth = n, orr = 2 * n, os = 3 * n, oq = 5 * n, ol = 7 * n;

  PHRealization ph{Mat::Zero(size, size), Mat::Zero(size, size), Mat::Zero(size, 2 * n)};
  const Mat eye_n = Mat::Identity(n, n);
  const Mat eye_2n = Mat::Identity(2 * n, 2 * n);
  const Mat big_e = algebra::kron_expand(p.incidence);

  ph.J.block(op, oth, n, n) = -eye_n;
  ph.J.block(oth, op, n, n) = eye_n;
  ph.J.block(os, oq, 2 * n, 2 * n) = eye_2n;
  ph.J.block(oq, os, 2 * n, 2 * n) = -eye_2n;
  if (m > 0) {
    ph.J.block(oq, ol, 2 * n, 2 * m) = -big_e;
    ph.J.block(ol, oq, 2 * m, 2 * n) = big_e.transpose();
  }

  ph.R.block(op, op, n, n) = p.D.asDiagonal();
  ph.R.block(orr, orr, n, n) = p.R_r.asDiagonal();
  ph.R.block(os, os, 2 * n, 2 * n) = algebra::kron_expand_diag(p.R_s);
  ph.R.block(oq, oq, 2 * n, 2 * n) = algebra::kron_expand_diag(p.G);
  if (m > 0) ph.R.block(ol, ol, 2 * m, 2 * m) = algebra::kron_expand_diag(p.R_t);

  ph.B.block(op, 0, n, n) = eye_n;
  ph.B.block(orr, n, n, n) = eye_n;
  return ph;
}

Vec stacked_energy_state(const SystemParams& p, const State& x) {
  Vec out(State::packed_size(p));
  out << p.M.cwiseProduct(x.omega), x.theta, x.lambda_r, x.lambda_s,
      algebra::kron_expand_diag(p.C) * x.v, algebra::kron_expand_diag(p.L_t) * x.i_t;
  return out;
}

Vec stacked_energy_rate(const SystemParams& p, const StateDerivative& dx) {
  return stacked_energy_state(p, dx);
}

Vec stacked_gradient(const CoEnergy& e) {
  Vec out(e.omega.size() + e.tau_e.size() + e.i_r.size() + e.i_s.size() + e.v.size() +
          e.i_t.size());
  out << e.omega, e.tau_e, e.i_r, e.i_s, e.v, e.i_t;
  return out;
}

Vec stacked_input(const ControlInput& u) {
  Vec out(u.u_m.size() + u.u_r.size());
  out << u.u_m, u.u_r;
  return out;
}

Vec passive_output(const SystemParams& p, const State& x) {
  const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
  Vec y(2 * p.n());
  y << x.omega, cur.i_r;
  return y;
}

double hamiltonian_rate(const SystemParams& p, const State& x, const ControlInput& u) {
  const Vec grad = stacked_gradient(co_energy(p, x));
  return grad.dot(stacked_energy_rate(p, rhs_open_loop(p, x, u)));
}

double dissipation_rate(const SystemParams& p, const State& x) {
  const CoEnergy e = co_energy(p, x);
  double d = x.omega.dot(p.D.cwiseProduct(x.omega)) + e.i_r.dot(p.R_r.cwiseProduct(e.i_r));
  for (Index i = 0; i < p.n(); ++i) {
    d += p.R_s[i] * e.i_s.segment(2 * i, 2).squaredNorm();
    d += p.G[i] * x.v.segment(2 * i, 2).squaredNorm();
  }
  for (Index l = 0; l < p.m(); ++l) d += p.R_t[l] * x.i_t.segment(2 * l, 2).squaredNorm();
  return d;
}

}  // namespace phsync
