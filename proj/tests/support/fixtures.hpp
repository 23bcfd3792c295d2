#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "phsync/model.hpp"

namespace phsync::testing {

inline constexpr double kOmega0 = 2.0 * std::numbers::pi * 50.0;

// Three-machine ring used throughout the examples in the paper.
inline SystemParams three_machine() {
  SystemParams p;
  p.M = Vec{{22000.0, 10000.0, 45000.0}};
  p.D = Vec{{4000.0, 1500.0, 8500.0}};
  p.L_r = Vec{{1.2, 7.0, 0.7}};
  p.R_r = Vec{{1.68, 4.2, 1.2}};
  p.L_m = Vec{{0.04, 0.08, 0.02}};
  p.L_s = Vec{{0.0018, 0.001, 0.0066}};
  p.R_s = Vec{{0.166, 0.07, 0.5}};
  p.C = Vec{{1e-5, 2e-4, 4e-3}};
  p.G = Vec{{0.8, 0.4, 1.0}};
  p.L_t = Vec{{0.0047, 0.0038, 0.0024}};
  p.R_t = Vec{{0.165, 0.166, 0.07}};
  p.incidence = Mat{{-1, 1, 0}, {0, -1, 1}, {1, 0, -1}};
  return p;
}

inline Vec three_machine_ir() { return Vec{{1950.0, 975.0, 3900.0}}; }

// Two copies of machine 1 joined by line 1.
inline SystemParams two_machine() {
  SystemParams p;
  p.M = Vec::Constant(2, 22000.0);
  p.D = Vec::Constant(2, 4000.0);
  p.L_r = Vec::Constant(2, 1.2);
  p.R_r = Vec::Constant(2, 1.68);
  p.L_m = Vec::Constant(2, 0.04);
  p.L_s = Vec::Constant(2, 0.0018);
  p.R_s = Vec::Constant(2, 0.166);
  p.C = Vec::Constant(2, 1e-5);
  p.G = Vec::Constant(2, 0.8);
  p.L_t = Vec::Constant(1, 0.0047);
  p.R_t = Vec::Constant(1, 0.165);
  p.incidence = Mat{{-1}, {1}};
  return p;
}

// Single machine feeding its own bus, no lines.
inline SystemParams single_machine() {
  SystemParams p = two_machine();
  p.M.conservativeResize(1);
  p.D.conservativeResize(1);
  p.L_r.conservativeResize(1);
  p.R_r.conservativeResize(1);
  p.L_m.conservativeResize(1);
  p.L_s.conservativeResize(1);
  p.R_s.conservativeResize(1);
  p.C.conservativeResize(1);
  p.G.conservativeResize(1);
  p.L_t.resize(0);
  p.R_t.resize(0);
  p.incidence.resize(1, 0);
  return p;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  Vec uniform(Index k, double lo, double hi) {
    Vec v(k);
    for (Index i = 0; i < k; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  Vec angles(Index k) { return uniform(k, -std::numbers::pi, std::numbers::pi); }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// Physically sized random operating point (near-synchronous speeds, currents
// of the order of the rotor references, bus voltages of a few kV).
inline State random_state(const SystemParams& p, Rng& rng) {
  const Index n = p.n(), m = p.m();
  return state_from_currents(p, Vec::Constant(n, kOmega0) + rng.uniform(n, -5.0, 5.0), rng.angles(n),
                             rng.uniform(n, 0.0, 4000.0), rng.uniform(2 * n, -800.0, 800.0),
                             rng.uniform(2 * n, -5000.0, 5000.0), rng.uniform(2 * m, -300.0, 300.0));
}

inline ControlInput random_input(const SystemParams& p, Rng& rng) {
  return {rng.uniform(p.n(), -1e5, 1e5), rng.uniform(p.n(), -2000.0, 2000.0)};
}

inline double rel_err(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline double wrap(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

// ---- independent oracles -------------------------------------------------

using CMat = Eigen::MatrixXcd;

// a + jb -> [[a, -b], [b, a]] for every entry.
inline Mat realify(const CMat& c) {
  Mat r(2 * c.rows(), 2 * c.cols());
  for (Index i = 0; i < c.rows(); ++i)
    for (Index k = 0; k < c.cols(); ++k) {
      const double a = c(i, k).real(), b = c(i, k).imag();
      r.block<2, 2>(2 * i, 2 * k) << a, -b, b, a;
    }
  return r;
}

struct ComplexNetwork {
  CMat Z_s, Y_c, Z_t, lap, bus_imp, Y_net;
};

inline ComplexNetwork complex_network(const SystemParams& p, double w0) {
  using C = std::complex<double>;
  const Index n = p.n(), m = p.m();
  ComplexNetwork net;
  net.Z_s = CMat::Zero(n, n);
  net.Y_c = CMat::Zero(n, n);
  net.Z_t = CMat::Zero(m, m);
  for (Index i = 0; i < n; ++i) {
    net.Z_s(i, i) = C(p.R_s[i], w0 * p.L_s[i]);
    net.Y_c(i, i) = C(p.G[i], w0 * p.C[i]);
  }
  for (Index e = 0; e < m; ++e) net.Z_t(e, e) = C(p.R_t[e], w0 * p.L_t[e]);
  const CMat E = p.incidence.cast<C>();
  net.lap = m > 0 ? CMat(E * net.Z_t.inverse() * E.transpose()) : CMat::Zero(n, n);
  net.bus_imp = (net.Y_c + net.lap).inverse();
  net.Y_net = (net.Z_s + net.bus_imp).inverse();
  return net;
}

// Stacked closed form of the regulator solution, rows (i_s, v, i_t).
inline Mat pi_closed_form(const SystemParams& p, double w0) {
  using C = std::complex<double>;
  const Index n = p.n(), m = p.m();
  const ComplexNetwork net = complex_network(p, w0);
  CMat pi(2 * n + m, n);
  pi.topRows(n) = -net.Y_net;
  pi.middleRows(n, n) = net.bus_imp * net.Y_net;
  if (m > 0)
    pi.bottomRows(m) = net.Z_t.inverse() * p.incidence.cast<C>().transpose() * net.bus_imp * net.Y_net;
  return realify(pi);
}

// L_theta written out entry by entry, stator rows then rotor rows.
inline Mat dense_inductance(const SystemParams& p, const Vec& theta) {
  const Index n = p.n();
  Mat L = Mat::Zero(3 * n, 3 * n);
  for (Index i = 0; i < n; ++i) {
    L(2 * i, 2 * i) = L(2 * i + 1, 2 * i + 1) = p.L_s[i];
    L(2 * n + i, 2 * n + i) = p.L_r[i];
    L(2 * i, 2 * n + i) = L(2 * n + i, 2 * i) = p.L_m[i] * std::cos(theta[i]);
    L(2 * i + 1, 2 * n + i) = L(2 * n + i, 2 * i + 1) = p.L_m[i] * std::sin(theta[i]);
  }
  return L;
}

inline double dense_magnetic_energy(const SystemParams& p, const Vec& theta, const Vec& lambda_s,
                                    const Vec& lambda_r) {
  Vec lam(3 * p.n());
  lam << lambda_s, lambda_r;
  return 0.5 * lam.dot(dense_inductance(p, theta).ldlt().solve(lam));
}

// Central difference of the magnetic energy in each angle, fluxes held fixed.
inline Vec fd_torque(const SystemParams& p, const State& x, double h) {
  Vec tau(p.n());
  for (Index i = 0; i < p.n(); ++i) {
    Vec tp = x.theta, tm = x.theta;
    tp[i] += h;
    tm[i] -= h;
    tau[i] = (dense_magnetic_energy(p, tp, x.lambda_s, x.lambda_r) -
              dense_magnetic_energy(p, tm, x.lambda_s, x.lambda_r)) /
             (2.0 * h);
  }
  return tau;
}

template <class F>
Vec fd_gradient(F&& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace phsync::testing
