#pragma once

#include <iosfwd>
#include <vector>

#include "phsync/steady_state.hpp"

namespace phsync {

/// Network potential S(theta) = 1/2 i_s^T L_s i_s - 1/2 v^T C v +
/// 1/2 i_t^T L_t i_t evaluated on the steady network flow.
///
/// Holds the two constant 2n x 2n kernels
///   W = Pi^T blkdiag(L_s, -C, L_t) Pi   (storage)
///   K = Pi^T blkdiag(R_s,  G, R_t) Pi   (dissipation)
/// so S(theta) = 1/2 xi^T W xi with xi the steady stator EMF.
class PotentialEvaluator {
 public:
  PotentialEvaluator(const SystemParams& p, const SteadyStateMap& ss);

  /// Quadratic-form route.
  double potential(const Vec& theta) const;
  /// Term-by-term route through the phasor flow.
  double potential_from_flow(const Vec& theta) const;

  struct Terms {
    double stator;     // 1/2 i_s^T L_s i_s >= 0
    double capacitor;  // 1/2 v^T C v >= 0, enters S with a minus sign
    double line;       // 1/2 i_t^T L_t i_t >= 0
  };
  Terms terms(const Vec& theta) const;

  /// Closed-form gradient
  /// omega0 I_r* (L_m (x) e2^T) R^T W R (L_m (x) e1) i_r* omega0.
  Vec gradient(const Vec& theta) const;

  /// Active part of the steady-state torque,
  /// I_r* (L_m (x) e2^T) R^T K R (L_m (x) e2) i_r* omega0.
  Vec active_torque(const Vec& theta) const;

  const Mat& storage_kernel() const { return storage_; }
  const Mat& dissipation_kernel() const { return dissipation_; }
  Index n() const { return n_; }
  double omega0() const { return omega0_; }

  /// omega0 * max |K_net(0)|, the torque scale used for default tolerances.
  double torque_scale() const { return torque_scale_; }

 private:
  Vec emf(const Vec& theta) const;

  Index n_;
  double omega0_;
  Vec lm_ir_;  // L_m,i i_r*,i
  Vec L_s_, C_, L_t_;
  Mat pi_;
  Mat storage_;
  Mat dissipation_;
  double torque_scale_;
};

enum class CriticalKind { minimum, saddle, maximum, degenerate };
const char* to_string(CriticalKind k);

enum class SearchMethod {
  descent,  // backtracking gradient descent on S
  newton,   // Newton iteration on grad S = 0; reaches saddles and maxima too
};

struct MinimizeOptions {
  double step = 1e-2;     // initial angle step, rad
  double tol = 0.0;       // on ||grad S||; <= 0 selects 1e-8 * torque scale
  int max_iterations = 20000;
  double hessian_step = 1e-5;
  double classification_threshold = 1e-6;  // relative to max |eigenvalue|
  SearchMethod method = SearchMethod::descent;
};

struct CriticalPoint {
  Vec theta;  // gauge-fixed, theta_1 = 0
  double value = 0.0;
  double gradient_norm = 0.0;
  CriticalKind kind = CriticalKind::degenerate;
  Vec hessian_eigenvalues;  // on the complement of the diagonal
  int iterations = 0;
  bool converged = false;
};

/// Descends S on the torus with theta_1 pinned to 0 and classifies the end
/// point through the projected finite-difference Hessian. Running out of
/// iterations is reported through `converged`, not thrown.
CriticalPoint minimize(const PotentialEvaluator& ev, const Vec& theta0,
                       const MinimizeOptions& opts = {});

/// Finite-difference Hessian of S projected onto the complement of the
/// all-ones direction, in an orthonormal basis ((n-1) x (n-1)).
Mat projected_hessian(const PotentialEvaluator& ev, const Vec& theta, double h = 1e-5);

CriticalKind classify(const Vec& eigenvalues, double rel_threshold);

/// Grid of S over [-pi, pi)^k in row-major order (last angle fastest).
/// Gauge-fixed scans pin theta_1 = 0 and vary theta_2..theta_n; full scans
/// vary all n angles.
struct TorusScan {
  Index n = 0;
  int resolution = 0;
  bool gauge_fixed = true;
  Index pinned = 0;  // index of the pinned machine when gauge_fixed
  std::vector<double> values;

  Index free_dims() const { return gauge_fixed ? n - 1 : n; }
  double angle(int k) const;
  /// Angles of the grid point with flat index `flat`.
  Vec theta_at(std::size_t flat) const;
  std::size_t argmin() const;
};

/// Throws std::invalid_argument for resolution <= 1 or grids larger than the
/// resource guard (n <= 3 gauge-fixed, n <= 2 full).
TorusScan scan_torus(const PotentialEvaluator& ev, int resolution, bool gauge_fixed = true,
                     Index pinned = 0);

/// Header "theta_2,...,theta_n,S" (or "theta_1,...,theta_n,S" for full scans).
void write_scan_csv(std::ostream& os, const TorusScan& scan);

}  // namespace phsync
