#include "phsync/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "phsync/algebra.hpp"

namespace phsync {

namespace {

Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

Mat weighted_gram(const Mat& pi, const Vec& weights) {
  return symmetrized(pi.transpose() * weights.asDiagonal() * pi);
}

// Orthonormal basis of the complement of the all-ones direction.
Mat diagonal_complement(Index n) {
  Mat a = Mat::Identity(n, n);
  a.col(0).setOnes();
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  return q.rightCols(n - 1);
}

Vec gauge_fix(const Vec& theta, Index pinned = 0) {
  return theta - Vec::Constant(theta.size(), theta[pinned]);
}

}  // namespace

PotentialEvaluator::PotentialEvaluator(const SystemParams& p, const SteadyStateMap& ss)
    : n_(p.n()),
      omega0_(ss.omega0()),
      lm_ir_(p.L_m.cwiseProduct(ss.i_r_star())),
      L_s_(p.L_s),
      C_(p.C),
      L_t_(p.L_t),
      pi_(ss.pi()) {
  const Index n = p.n(), m = p.m();
  Vec storage_w(4 * n + 2 * m);
  Vec dissipation_w(4 * n + 2 * m);
  for (Index i = 0; i < n; ++i) {
    storage_w.segment(2 * i, 2).setConstant(p.L_s[i]);
    storage_w.segment(2 * n + 2 * i, 2).setConstant(-p.C[i]);
    dissipation_w.segment(2 * i, 2).setConstant(p.R_s[i]);
    dissipation_w.segment(2 * n + 2 * i, 2).setConstant(p.G[i]);
  }
  for (Index e = 0; e < m; ++e) {
    storage_w.segment(4 * n + 2 * e, 2).setConstant(p.L_t[e]);
    dissipation_w.segment(4 * n + 2 * e, 2).setConstant(p.R_t[e]);
  }
  storage_ = weighted_gram(pi_, storage_w);
  dissipation_ = weighted_gram(pi_, dissipation_w);
  torque_scale_ = omega0_ * k_net(ss, p, Vec::Zero(n)).cwiseAbs().maxCoeff();
}

Vec PotentialEvaluator::emf(const Vec& theta) const {
  Vec xi(2 * n_);
  for (Index i = 0; i < n_; ++i) {
    const double k = lm_ir_[i] * omega0_;
    xi[2 * i] = -std::sin(theta[i]) * k;
    xi[2 * i + 1] = std::cos(theta[i]) * k;
  }
  return xi;
}

double PotentialEvaluator::potential(const Vec& theta) const {
  const Vec xi = emf(theta);
  return 0.5 * xi.dot(storage_ * xi);
}

PotentialEvaluator::Terms PotentialEvaluator::terms(const Vec& theta) const {
  const Vec z = pi_ * emf(theta);
  const Index n = n_;
  const Index m = (z.size() - 4 * n) / 2;
  Terms t{0.0, 0.0, 0.0};
  for (Index i = 0; i < n; ++i) {
    t.stator += 0.5 * L_s_[i] * z.segment(2 * i, 2).squaredNorm();
    t.capacitor += 0.5 * C_[i] * z.segment(2 * n + 2 * i, 2).squaredNorm();
  }
  for (Index e = 0; e < m; ++e) t.line += 0.5 * L_t_[e] * z.segment(4 * n + 2 * e, 2).squaredNorm();
  return t;
}

double PotentialEvaluator::potential_from_flow(const Vec& theta) const {
  const Terms t = terms(theta);
  return t.stator - t.capacitor + t.line;
}

Vec PotentialEvaluator::gradient(const Vec& theta) const {
  // a = R (L_m (x) e1) i_r* omega0
  Vec a(2 * n_);
  for (Index i = 0; i < n_; ++i) {
    const double k = lm_ir_[i] * omega0_;
    a[2 * i] = std::cos(theta[i]) * k;
    a[2 * i + 1] = std::sin(theta[i]) * k;
  }
  const Vec b = storage_ * a;
  Vec g(n_);
  for (Index i = 0; i < n_; ++i) {
    g[i] = omega0_ * lm_ir_[i] *
           (-std::sin(theta[i]) * b[2 * i] + std::cos(theta[i]) * b[2 * i + 1]);
  }
  return g;
}

Vec PotentialEvaluator::active_torque(const Vec& theta) const {
  const Vec b = dissipation_ * emf(theta);
  Vec t(n_);
  for (Index i = 0; i < n_; ++i) {
    t[i] = lm_ir_[i] * (-std::sin(theta[i]) * b[2 * i] + std::cos(theta[i]) * b[2 * i + 1]);
  }
  return t;
}

const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::degenerate: return "degenerate";
  }
  return "unknown";
}

Mat projected_hessian(const PotentialEvaluator& ev, const Vec& theta, double h) {
  const Index n = ev.n();
  if (n < 2) return Mat::Zero(0, 0);
  Mat hess(n, n);
  for (Index k = 0; k < n; ++k) {
    Vec tp = theta, tm = theta;
    tp[k] += h;
    tm[k] -= h;
    hess.col(k) = (ev.gradient(tp) - ev.gradient(tm)) / (2.0 * h);
  }
  const Mat u = diagonal_complement(n);
  return symmetrized(u.transpose() * symmetrized(hess) * u);
}

CriticalKind classify(const Vec& eigenvalues, double rel_threshold) {
  if (eigenvalues.size() == 0) return CriticalKind::minimum;
  const double scale = eigenvalues.cwiseAbs().maxCoeff();
  if (scale == 0.0) return CriticalKind::degenerate;
  const double thr = rel_threshold * scale;
  bool pos = false, neg = false;
  for (Index i = 0; i < eigenvalues.size(); ++i) {
    if (std::abs(eigenvalues[i]) <= thr) return CriticalKind::degenerate;
    (eigenvalues[i] > 0 ? pos : neg) = true;
  }
  if (pos && neg) return CriticalKind::saddle;
  return pos ? CriticalKind::minimum : CriticalKind::maximum;
}

namespace {

void finish(const PotentialEvaluator& ev, const MinimizeOptions& opts, CriticalPoint& cp) {
  cp.theta = cp.theta.unaryExpr([](double a) { return algebra::wrap_angle(a); });
  cp.value = ev.potential(cp.theta);
  cp.gradient_norm = ev.gradient(cp.theta).norm();
  const Mat hp = projected_hessian(ev, cp.theta, opts.hessian_step);
  if (hp.size() == 0) {
    cp.hessian_eigenvalues = Vec(0);
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(hp, Eigen::EigenvaluesOnly);
    cp.hessian_eigenvalues = es.eigenvalues();
  }
  cp.kind = classify(cp.hessian_eigenvalues, opts.classification_threshold);
}

void descend(const PotentialEvaluator& ev, const MinimizeOptions& opts, double tol,
             CriticalPoint& cp) {
  const Index n = ev.n();
  Vec theta = cp.theta;
  double s = ev.potential(theta);
  Vec g = ev.gradient(theta);
  double alpha = -1.0;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  for (cp.iterations = 0; cp.iterations < opts.max_iterations; ++cp.iterations) {
    if (g.norm() <= tol) {
      cp.converged = true;
      break;
    }
    Vec d = -g;
    d[0] = 0.0;
    const double dmax = d.tail(n - 1).cwiseAbs().maxCoeff();
    if (alpha <= 0.0) alpha = opts.step / dmax;

    bool accepted = false;
    while (alpha * dmax > 1e-15) {
      const Vec trial = theta + alpha * d;
      const double st = ev.potential(trial);
      const Vec gt = ev.gradient(trial);
      const double decrease = 1e-4 * alpha * d.squaredNorm();
      const bool armijo = st <= s - decrease;
      // near the optimum S differences drop below rounding of S itself
      const bool flat = st <= s + 8.0 * eps * std::abs(s) && gt.norm() < g.norm();
      if (armijo || flat) {
        theta = trial;
        s = st;
        g = gt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    alpha *= 2.0;
  }
  cp.theta = gauge_fix(theta);
}

void newton(const PotentialEvaluator& ev, const MinimizeOptions& opts, double tol,
            CriticalPoint& cp) {
  const Index n = ev.n();
  Vec theta = cp.theta;
  for (cp.iterations = 0; cp.iterations < opts.max_iterations; ++cp.iterations) {
    const Vec g = ev.gradient(theta);
    if (g.norm() <= tol) {
      cp.converged = true;
      break;
    }
    Mat hess(n - 1, n - 1);
    for (Index k = 1; k < n; ++k) {
      Vec tp = theta, tm = theta;
      tp[k] += opts.hessian_step;
      tm[k] -= opts.hessian_step;
      hess.col(k - 1) = ((ev.gradient(tp) - ev.gradient(tm)) / (2.0 * opts.hessian_step)).tail(n - 1);
    }
    Vec delta = -hess.fullPivLu().solve(g.tail(n - 1));
    if (!delta.allFinite()) break;
    const double big = delta.cwiseAbs().maxCoeff();
    if (big > 0.25) delta *= 0.25 / big;
    theta.tail(n - 1) += delta;
  }
  cp.theta = gauge_fix(theta);
}

}  // namespace

CriticalPoint minimize(const PotentialEvaluator& ev, const Vec& theta0,
                       const MinimizeOptions& opts) {
  if (theta0.size() != ev.n()) throw std::invalid_argument("minimize: theta0 has wrong size");
  const double tol = opts.tol > 0.0 ? opts.tol : 1e-8 * ev.torque_scale();
  CriticalPoint cp;
  cp.theta = gauge_fix(theta0);
  if (ev.n() >= 2) {
    if (opts.method == SearchMethod::descent) {
      descend(ev, opts, tol, cp);
    } else {
      newton(ev, opts, tol, cp);
    }
  } else {
    cp.converged = true;
  }
  finish(ev, opts, cp);
  if (!cp.converged && cp.gradient_norm <= tol) cp.converged = true;
  return cp;
}

double TorusScan::angle(int k) const {
  return -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(k) / resolution;
}

Vec TorusScan::theta_at(std::size_t flat) const {
  Vec theta = Vec::Zero(n);
  std::vector<Index> free;
  for (Index i = 0; i < n; ++i) {
    if (!gauge_fixed || i != pinned) free.push_back(i);
  }
  for (auto it = free.rbegin(); it != free.rend(); ++it) {
    theta[*it] = angle(static_cast<int>(flat % resolution));
    flat /= resolution;
  }
  return theta;
}

std::size_t TorusScan::argmin() const {
  return static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
}

TorusScan scan_torus(const PotentialEvaluator& ev, int resolution, bool gauge_fixed,
                     Index pinned) {
  if (resolution <= 1) throw std::invalid_argument("scan_torus: resolution must be > 1");
  const Index n = ev.n();
  if (gauge_fixed ? n > 3 : n > 2) {
    throw std::invalid_argument("scan_torus: grid too large (gauge-fixed n <= 3, full n <= 2)");
  }
  if (pinned < 0 || pinned >= n) throw std::invalid_argument("scan_torus: bad pinned index");
  TorusScan scan;
  scan.n = n;
  scan.resolution = resolution;
  scan.gauge_fixed = gauge_fixed;
  scan.pinned = pinned;
  std::size_t total = 1;
  for (Index d = 0; d < scan.free_dims(); ++d) total *= static_cast<std::size_t>(resolution);
  scan.values.resize(total);
  for (std::size_t k = 0; k < total; ++k) scan.values[k] = ev.potential(scan.theta_at(k));
  return scan;
}

void write_scan_csv(std::ostream& os, const TorusScan& scan) {
  std::vector<Index> free;
  for (Index i = 0; i < scan.n; ++i) {
    if (!scan.gauge_fixed || i != scan.pinned) free.push_back(i);
  }
  for (Index i : free) os << "theta_" << (i + 1) << ",";
  os << "S\n";
  const auto old_precision = os.precision(17);
  for (std::size_t k = 0; k < scan.values.size(); ++k) {
    const Vec theta = scan.theta_at(k);
    for (Index i : free) os << theta[i] << ",";
    os << scan.values[k] << "\n";
  }
  os.precision(old_precision);
}

}  // namespace phsync
