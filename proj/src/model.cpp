#include "phsync/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "phsync/algebra.hpp"

namespace phsync {

namespace {

void require_size(const Vec& v, Index size, const char* name) {
  if (v.size() != size) {
    std::ostringstream os;
    os << "parameter " << name << " has " << v.size() << " entries, expected " << size;
    throw ParameterError(os.str());
  }
}

void require_positive(const Vec& v, const char* name) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!(std::isfinite(v[i]) && v[i] > 0.0)) {
      std::ostringstream os;
      os << "parameter " << name << "[" << i << "] = " << v[i] << " must be finite and > 0";
      throw ParameterError(os.str());
    }
  }
}

bool connected(const Mat& e) {
  const Index n = e.rows();
  if (n <= 1) return true;
  std::vector<Index> parent(n);
  for (Index i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](Index a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  Index components = n;
  for (Index c = 0; c < e.cols(); ++c) {
    Index a = -1, b = -1;
    for (Index r = 0; r < n; ++r) {
      if (e(r, c) > 0.5) a = r;
      if (e(r, c) < -0.5) b = r;
    }
    const Index ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components == 1;
}

}  // namespace

void SystemParams::validate() const {
  const Index nm = n();
  if (nm < 1) throw ParameterError("at least one machine is required");
  require_size(D, nm, "D");
  require_size(L_r, nm, "L_r");
  require_size(R_r, nm, "R_r");
  require_size(L_m, nm, "L_m");
  require_size(L_s, nm, "L_s");
  require_size(R_s, nm, "R_s");
  require_size(C, nm, "C");
  require_size(G, nm, "G");
  if (incidence.rows() != nm) {
    std::ostringstream os;
    os << "incidence has " << incidence.rows() << " rows, expected one per bus (" << nm << ")";
    throw ParameterError(os.str());
  }
  require_size(L_t, m(), "L_t");
  require_size(R_t, m(), "R_t");

  require_positive(M, "M");
  require_positive(D, "D");
  require_positive(L_r, "L_r");
  require_positive(R_r, "R_r");
  require_positive(L_m, "L_m");
  require_positive(L_s, "L_s");
  require_positive(R_s, "R_s");
  require_positive(C, "C");
  require_positive(G, "G");
  require_positive(L_t, "L_t");
  require_positive(R_t, "R_t");

  for (Index i = 0; i < nm; ++i) {
    if (!(L_s[i] * L_r[i] - L_m[i] * L_m[i] > 0.0)) {
      std::ostringstream os;
      os << "machine " << i << ": L_s L_r - L_m^2 must be > 0";
      throw ParameterError(os.str());
    }
  }

  for (Index c = 0; c < m(); ++c) {
    int plus = 0, minus = 0;
    for (Index r = 0; r < nm; ++r) {
      const double e = incidence(r, c);
      if (e == 1.0) {
        ++plus;
      } else if (e == -1.0) {
        ++minus;
      } else if (e != 0.0) {
        std::ostringstream os;
        os << "incidence(" << r << "," << c << ") = " << e << " is not in {-1, 0, 1}";
        throw ParameterError(os.str());
      }
    }
    if (plus != 1 || minus != 1) {
      std::ostringstream os;
      os << "incidence column " << c << " must contain exactly one +1 and one -1";
      throw ParameterError(os.str());
    }
  }
  if (!connected(incidence)) throw ParameterError("network graph is not connected");
}

State State::zeros(const SystemParams& p) {
  const Index n = p.n(), m = p.m();
  return {Vec::Zero(n), Vec::Zero(n), Vec::Zero(n), Vec::Zero(2 * n), Vec::Zero(2 * n),
          Vec::Zero(2 * m)};
}

Vec State::pack() const {
  Vec x(omega.size() + theta.size() + lambda_r.size() + lambda_s.size() + v.size() + i_t.size());
  x << omega, theta, lambda_r, lambda_s, v, i_t;
  return x;
}

State State::unpack(const SystemParams& p, const Vec& x) {
  const Index n = p.n(), m = p.m();
  if (x.size() != packed_size(p)) throw std::invalid_argument("State::unpack: size mismatch");
  State s;
  Index o = 0;
  s.omega = x.segment(o, n), o += n;
  s.theta = x.segment(o, n), o += n;
  s.lambda_r = x.segment(o, n), o += n;
  s.lambda_s = x.segment(o, 2 * n), o += 2 * n;
  s.v = x.segment(o, 2 * n), o += 2 * n;
  s.i_t = x.segment(o, 2 * m);
  return s;
}

Mat machine_inductance(const SystemParams& p, const Vec& theta) {
  const Index n = p.n();
  for (Index i = 0; i < n; ++i) {
    if (!(p.L_s[i] * p.L_r[i] - p.L_m[i] * p.L_m[i] > 0.0)) {
      throw ParameterError("machine " + std::to_string(i) + ": L_s L_r - L_m^2 must be > 0");
    }
  }
  Mat l = Mat::Zero(3 * n, 3 * n);
  l.topLeftCorner(2 * n, 2 * n) = algebra::kron_expand_diag(p.L_s);
  l.bottomRightCorner(n, n) = p.L_r.asDiagonal();
  const Mat coupling = algebra::rotation_block(theta) * algebra::embed_e1(p.L_m);
  l.topRightCorner(2 * n, n) = coupling;
  l.bottomLeftCorner(n, 2 * n) = coupling.transpose();
  return l;
}

// L_theta decouples into one 3x3 block per machine; each block is solved by
// eliminating the stator pair.
MachineCurrents currents_from_fluxes(const SystemParams& p, const Vec& theta, const Vec& lambda_s,
                                     const Vec& lambda_r) {
  const Index n = p.n();
  MachineCurrents out{Vec(2 * n), Vec(n)};
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(theta[i]);
    const double s = std::sin(theta[i]);
    const double ls = p.L_s[i];
    const double lm = p.L_m[i];
    const double schur = p.L_r[i] - lm * lm / ls;
    if (!(schur > 0.0)) {
      throw SingularSystemError("machine inductance is singular",
                                std::numeric_limits<double>::infinity());
    }
    const double proj = c * lambda_s[2 * i] + s * lambda_s[2 * i + 1];
    const double ir = (lambda_r[i] - lm / ls * proj) / schur;
    out.i_r[i] = ir;
    out.i_s[2 * i] = (lambda_s[2 * i] - lm * c * ir) / ls;
    out.i_s[2 * i + 1] = (lambda_s[2 * i + 1] - lm * s * ir) / ls;
  }
  return out;
}

MachineFluxes fluxes_from_currents(const SystemParams& p, const Vec& theta, const Vec& i_s,
                                   const Vec& i_r) {
  const Index n = p.n();
  MachineFluxes out{Vec(2 * n), Vec(n)};
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(theta[i]);
    const double s = std::sin(theta[i]);
    const double lm = p.L_m[i];
    out.lambda_s[2 * i] = p.L_s[i] * i_s[2 * i] + lm * c * i_r[i];
    out.lambda_s[2 * i + 1] = p.L_s[i] * i_s[2 * i + 1] + lm * s * i_r[i];
    out.lambda_r[i] = p.L_r[i] * i_r[i] + lm * (c * i_s[2 * i] + s * i_s[2 * i + 1]);
  }
  return out;
}

Vec electrical_torque(const SystemParams& p, const Vec& theta, const Vec& i_r, const Vec& i_s) {
  const Index n = p.n();
  Vec tau(n);
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(theta[i]);
    const double s = std::sin(theta[i]);
    // e2^T R^T i_s
    const double q = -s * i_s[2 * i] + c * i_s[2 * i + 1];
    tau[i] = -i_r[i] * p.L_m[i] * q;
  }
  return tau;
}

Vec stator_emf(const SystemParams& p, const Vec& theta, const Vec& omega, const Vec& i_r,
               const Vec& di_r_dt) {
  const Index n = p.n();
  Vec xi(2 * n);
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(theta[i]);
    const double s = std::sin(theta[i]);
    const double lm = p.L_m[i];
    // L_m (omega R e2 i_r + R e1 di_r)
    xi[2 * i] = lm * (-s * omega[i] * i_r[i] + c * di_r_dt[i]);
    xi[2 * i + 1] = lm * (c * omega[i] * i_r[i] + s * di_r_dt[i]);
  }
  return xi;
}

Vec rotor_emf(const SystemParams& p, const Vec& theta, const Vec& omega, const Vec& i_s,
              const Vec& di_s_dt) {
  const Index n = p.n();
  Vec xi(n);
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(theta[i]);
    const double s = std::sin(theta[i]);
    // L_m (omega e2^T R^T i_s + e1^T R^T di_s)
    const double q = -s * i_s[2 * i] + c * i_s[2 * i + 1];
    const double d = c * di_s_dt[2 * i] + s * di_s_dt[2 * i + 1];
    xi[i] = p.L_m[i] * (omega[i] * q + d);
  }
  return xi;
}

double magnetic_energy(const SystemParams& p, const Vec& theta, const Vec& lambda_s,
                       const Vec& lambda_r) {
  const MachineCurrents i = currents_from_fluxes(p, theta, lambda_s, lambda_r);
  return 0.5 * (lambda_s.dot(i.i_s) + lambda_r.dot(i.i_r));
}

double hamiltonian(const SystemParams& p, const State& x) {
  const double kinetic = 0.5 * x.omega.dot(p.M.cwiseProduct(x.omega));
  double capacitive = 0.0;
  for (Index i = 0; i < p.n(); ++i) {
    capacitive += 0.5 * p.C[i] * (x.v[2 * i] * x.v[2 * i] + x.v[2 * i + 1] * x.v[2 * i + 1]);
  }
  double inductive = 0.0;
  for (Index e = 0; e < p.m(); ++e) {
    inductive +=
        0.5 * p.L_t[e] * (x.i_t[2 * e] * x.i_t[2 * e] + x.i_t[2 * e + 1] * x.i_t[2 * e + 1]);
  }
  return kinetic + magnetic_energy(p, x.theta, x.lambda_s, x.lambda_r) + capacitive + inductive;
}

CoEnergy co_energy(const SystemParams& p, const State& x) {
  MachineCurrents i = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
  Vec tau = electrical_torque(p, x.theta, i.i_r, i.i_s);
  return {x.omega, std::move(tau), std::move(i.i_r), std::move(i.i_s), x.v, x.i_t};
}

State state_from_currents(const SystemParams& p, const Vec& omega, const Vec& theta,
                          const Vec& i_r, const Vec& i_s, const Vec& v, const Vec& i_t) {
  MachineFluxes f = fluxes_from_currents(p, theta, i_s, i_r);
  return {omega, theta, std::move(f.lambda_r), std::move(f.lambda_s), v, i_t};
}

}  // namespace phsync
