#include "phsync/steady_state.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "phsync/algebra.hpp"

namespace phsync {

namespace {

void require_omega0(double omega0) {
  if (!(std::isfinite(omega0) && omega0 > 0.0)) {
    throw ParameterError("omega0 must be finite and > 0");
  }
}

Index incidence_rank(const Mat& e) {
  if (e.cols() == 0) return 0;
  Eigen::FullPivLU<Mat> lu(e);
  return lu.rank();
}

}  // namespace

ImpedanceSet build_impedances(const SystemParams& p, double omega0) {
  require_omega0(omega0);
  if (incidence_rank(p.incidence) != p.n() - 1) {
    throw ParameterError("network graph is not connected (rank(E) != n - 1)");
  }
  const Index n = p.n(), m = p.m();
  const BlockMatrix jn = algebra::kron_j(n);

  ImpedanceSet z;
  z.Z_s = algebra::kron_expand_diag(p.R_s) + omega0 * jn * algebra::kron_expand_diag(p.L_s);
  z.Y_c = algebra::kron_expand_diag(p.G) + omega0 * jn * algebra::kron_expand_diag(p.C);
  if (m > 0) {
    const BlockMatrix jm = algebra::kron_j(m);
    z.Z_t = algebra::kron_expand_diag(p.R_t) + omega0 * jm * algebra::kron_expand_diag(p.L_t);
    const BlockMatrix big_e = algebra::kron_expand(p.incidence);
    z.L_t_lap = big_e * z.Z_t.partialPivLu().solve(big_e.transpose());
  } else {
    z.Z_t = BlockMatrix::Zero(0, 0);
    z.L_t_lap = BlockMatrix::Zero(2 * n, 2 * n);
  }
  return z;
}

RegulatorSystem build_regulator_system(const SystemParams& p) {
  const Index n = p.n(), m = p.m();
  const Index size = 4 * n + 2 * m;
  RegulatorSystem r{Mat::Zero(size, size), Mat::Zero(size, size), Mat::Zero(size, 2 * n)};
  const Mat eye = Mat::Identity(2 * n, 2 * n);

  r.A.block(0, 0, 2 * n, 2 * n) = algebra::kron_expand_diag(p.R_s);
  r.A.block(0, 2 * n, 2 * n, 2 * n) = -eye;
  r.A.block(2 * n, 0, 2 * n, 2 * n) = eye;
  r.A.block(2 * n, 2 * n, 2 * n, 2 * n) = algebra::kron_expand_diag(p.G);
  if (m > 0) {
    const BlockMatrix big_e = algebra::kron_expand(p.incidence);
    r.A.block(2 * n, 4 * n, 2 * n, 2 * m) = big_e;
    r.A.block(4 * n, 2 * n, 2 * m, 2 * n) = -big_e.transpose();
    r.A.block(4 * n, 4 * n, 2 * m, 2 * m) = algebra::kron_expand_diag(p.R_t);
  }

  r.Q.block(0, 0, 2 * n, 2 * n) = algebra::kron_expand_diag(p.L_s);
  r.Q.block(2 * n, 2 * n, 2 * n, 2 * n) = algebra::kron_expand_diag(p.C);
  if (m > 0) r.Q.block(4 * n, 4 * n, 2 * m, 2 * m) = algebra::kron_expand_diag(p.L_t);

  r.P.topRows(2 * n) = -eye;
  return r;
}

Eigen::VectorXcd transient_eigenvalues(const SystemParams& p) {
  const RegulatorSystem r = build_regulator_system(p);
  // Q is diagonal
  const Mat qinv_a = r.Q.diagonal().cwiseInverse().asDiagonal() * r.A;
  Eigen::EigenSolver<Mat> es(-qinv_a, false);
  return es.eigenvalues();
}

double spectral_abscissa(const SystemParams& p) {
  return transient_eigenvalues(p).real().maxCoeff();
}

double fastest_time_constant(const SystemParams& p) {
  return 1.0 / transient_eigenvalues(p).real().cwiseAbs().maxCoeff();
}

double slowest_time_constant(const SystemParams& p) {
  return 1.0 / transient_eigenvalues(p).real().cwiseAbs().minCoeff();
}

SteadyStateMap::SteadyStateMap(const SystemParams& p, double omega0, Vec i_r_star)
    : n_(p.n()), m_(p.m()), omega0_(omega0), i_r_star_(std::move(i_r_star)) {
  require_omega0(omega0);
  if (i_r_star_.size() != n_) throw ParameterError("i_r_star must have one entry per machine");
  impedances_ = build_impedances(p, omega0);
  regulator_ = build_regulator_system(p);

  const Index size = 4 * n_ + 2 * m_;
  const Mat lhs = regulator_.A + omega0 * algebra::kron_j(size / 2) * regulator_.Q;
  Eigen::PartialPivLU<Mat> lu(lhs);
  rcond_ = lu.rcond();
  if (!(rcond_ > 1e3 * std::numeric_limits<double>::epsilon())) {
    std::ostringstream os;
    os << "A + omega0 j Q is singular to working precision (condition ~ " << 1.0 / rcond_ << ")";
    throw SingularSystemError(os.str(), 1.0 / rcond_);
  }
  pi_ = lu.solve(regulator_.P);

  const BlockMatrix node = impedances_.Y_c + impedances_.L_t_lap;
  bus_impedance_ = node.partialPivLu().inverse();
  y_net_ = (impedances_.Z_s + bus_impedance_).partialPivLu().inverse();
}

double SteadyStateMap::sylvester_residual() const {
  const Mat s = omega0_ * algebra::kron_j(n_);
  const Mat res = regulator_.Q * pi_ * s + regulator_.A * pi_ - regulator_.P;
  return res.norm() / regulator_.P.norm();
}

SteadyStateMap solve_pi(const SystemParams& p, double omega0, const Vec& i_r_star) {
  return SteadyStateMap(p, omega0, i_r_star);
}

Mat emf_direction(const SystemParams& p, const Vec& i_r_star, const Vec& theta) {
  const Index n = p.n();
  Mat c = Mat::Zero(2 * n, n);
  for (Index i = 0; i < n; ++i) {
    const double k = p.L_m[i] * i_r_star[i];
    c(2 * i, i) = -std::sin(theta[i]) * k;
    c(2 * i + 1, i) = std::cos(theta[i]) * k;
  }
  return c;
}

Vec steady_emf(const SystemParams& p, const SteadyStateMap& ss, const Vec& theta) {
  const Index n = p.n();
  Vec xi(2 * n);
  for (Index i = 0; i < n; ++i) {
    const double k = p.L_m[i] * ss.i_r_star()[i] * ss.omega0();
    xi[2 * i] = -std::sin(theta[i]) * k;
    xi[2 * i + 1] = std::cos(theta[i]) * k;
  }
  return xi;
}

Vec NetworkFlow::stacked() const {
  Vec out(i_s.size() + v.size() + i_t.size());
  out << i_s, v, i_t;
  return out;
}

NetworkFlow network_flow(const SteadyStateMap& ss, const SystemParams& p, const Vec& theta) {
  const Vec xi = steady_emf(p, ss, theta);
  return {ss.pi_stator() * xi, ss.pi_bus() * xi, ss.pi_line() * xi};
}

Mat k_net(const SteadyStateMap& ss, const SystemParams& p, const Vec& theta) {
  const Mat c = emf_direction(p, ss.i_r_star(), theta);
  return c.transpose() * ss.y_net() * c;
}

Vec steady_state_torque(const SteadyStateMap& ss, const SystemParams& p, const Vec& theta) {
  return k_net(ss, p, theta) * Vec::Constant(p.n(), ss.omega0());
}

double steady_state_losses(const SteadyStateMap& ss, const SystemParams& p, const Vec& theta) {
  const NetworkFlow f = network_flow(ss, p, theta);
  double loss = 0.0;
  for (Index i = 0; i < p.n(); ++i) {
    loss += p.R_s[i] * f.i_s.segment(2 * i, 2).squaredNorm();
    loss += p.G[i] * f.v.segment(2 * i, 2).squaredNorm();
  }
  for (Index e = 0; e < p.m(); ++e) loss += p.R_t[e] * f.i_t.segment(2 * e, 2).squaredNorm();
  return loss;
}

PhasorResiduals phasor_residuals(const SteadyStateMap& ss, const SystemParams& p,
                                 const Vec& theta) {
  const NetworkFlow f = network_flow(ss, p, theta);
  const Vec xi = steady_emf(p, ss, theta);
  const ImpedanceSet& z = ss.impedances();
  auto rel = [](const Vec& r, double scale) { return scale > 0.0 ? r.norm() / scale : r.norm(); };

  PhasorResiduals out;
  const Vec zs_is = z.Z_s * f.i_s;
  out.stator = rel(zs_is - f.v + xi, std::max({zs_is.norm(), f.v.norm(), xi.norm()}));
  const Vec yc_v = z.Y_c * f.v;
  Vec bus = yc_v + f.i_s;
  Vec e_it = Vec::Zero(bus.size());
  if (p.m() > 0) {
    e_it = algebra::kron_expand(p.incidence) * f.i_t;
    bus += e_it;
  }
  out.bus = rel(bus, std::max({yc_v.norm(), f.i_s.norm(), e_it.norm()}));
  if (p.m() > 0) {
    const Vec zt_it = z.Z_t * f.i_t;
    const Vec et_v = algebra::kron_expand(p.incidence).transpose() * f.v;
    out.line = rel(zt_it - et_v, std::max(zt_it.norm(), et_v.norm()));
  }
  return out;
}

}  // namespace phsync
