#include "phsync/algebra.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace phsync::algebra {

BlockMatrix rotation_block(const Vec& theta) {
  const Index n = theta.size();
  BlockMatrix r = BlockMatrix::Zero(2 * n, 2 * n);
  for (Index i = 0; i < n; ++i) {
    const double c = std::cos(theta[i]);
    const double s = std::sin(theta[i]);
    r(2 * i, 2 * i) = c;
    r(2 * i, 2 * i + 1) = -s;
    r(2 * i + 1, 2 * i) = s;
    r(2 * i + 1, 2 * i + 1) = c;
  }
  return r;
}

Vec rotate(const Vec& theta, const Vec& x) {
  Vec y(x.size());
  for (Index i = 0; i < theta.size(); ++i) {
    const double c = std::cos(theta[i]);
    const double s = std::sin(theta[i]);
    y[2 * i] = c * x[2 * i] - s * x[2 * i + 1];
    y[2 * i + 1] = s * x[2 * i] + c * x[2 * i + 1];
  }
  return y;
}

Vec rotate_transpose(const Vec& theta, const Vec& x) {
  Vec y(x.size());
  for (Index i = 0; i < theta.size(); ++i) {
    const double c = std::cos(theta[i]);
    const double s = std::sin(theta[i]);
    y[2 * i] = c * x[2 * i] + s * x[2 * i + 1];
    y[2 * i + 1] = -s * x[2 * i] + c * x[2 * i + 1];
  }
  return y;
}

Vec rotate_uniform(double angle, const Vec& x) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Vec y(x.size());
  for (Index i = 0; i + 1 < x.size(); i += 2) {
    y[i] = c * x[i] - s * x[i + 1];
    y[i + 1] = s * x[i] + c * x[i + 1];
  }
  return y;
}

BlockMatrix kron_j(Index k) {
  if (k < 1) throw std::invalid_argument("kron_j: block count must be >= 1");
  BlockMatrix j = BlockMatrix::Zero(2 * k, 2 * k);
  for (Index i = 0; i < k; ++i) {
    j(2 * i, 2 * i + 1) = -1.0;
    j(2 * i + 1, 2 * i) = 1.0;
  }
  return j;
}

Vec apply_j(const Vec& x) {
  Vec y(x.size());
  for (Index i = 0; i + 1 < x.size(); i += 2) {
    y[i] = -x[i + 1];
    y[i + 1] = x[i];
  }
  return y;
}

BlockMatrix kron_expand(const Mat& d) {
  BlockMatrix k = BlockMatrix::Zero(2 * d.rows(), 2 * d.cols());
  for (Index r = 0; r < d.rows(); ++r) {
    for (Index c = 0; c < d.cols(); ++c) {
      k(2 * r, 2 * c) = d(r, c);
      k(2 * r + 1, 2 * c + 1) = d(r, c);
    }
  }
  return k;
}

BlockMatrix kron_expand_diag(const Vec& d) {
  Vec doubled(2 * d.size());
  for (Index i = 0; i < d.size(); ++i) doubled[2 * i] = doubled[2 * i + 1] = d[i];
  return doubled.asDiagonal();
}

Mat embed_e1(const Vec& d) {
  Mat e = Mat::Zero(2 * d.size(), d.size());
  for (Index i = 0; i < d.size(); ++i) e(2 * i, i) = d[i];
  return e;
}

Mat embed_e2(const Vec& d) {
  Mat e = Mat::Zero(2 * d.size(), d.size());
  for (Index i = 0; i < d.size(); ++i) e(2 * i + 1, i) = d[i];
  return e;
}

namespace {

Eigen::Matrix<double, 2, 3> clarke_rows() {
  const double k = std::sqrt(2.0 / 3.0);
  const double h = std::sqrt(3.0) / 2.0;
  Eigen::Matrix<double, 2, 3> t;
  t << 1.0, -0.5, -0.5,
       0.0, h, -h;
  return k * t;
}

}  // namespace

Eigen::Matrix<double, 2, Eigen::Dynamic> clarke_project(
    const Eigen::Matrix<double, 3, Eigen::Dynamic>& z3) {
  return clarke_rows() * z3;
}

Eigen::Vector2d clarke_project(const Eigen::Vector3d& z3) { return clarke_rows() * z3; }

bool is_phasor_structured(const Mat& m, double tol) {
  if (m.rows() % 2 != 0 || m.cols() % 2 != 0) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Index r = 0; r < m.rows(); r += 2) {
    for (Index c = 0; c < m.cols(); c += 2) {
      if (std::abs(m(r, c) - m(r + 1, c + 1)) > tol * scale) return false;
      if (std::abs(m(r, c + 1) + m(r + 1, c)) > tol * scale) return false;
    }
  }
  return true;
}

Eigen::MatrixXcd to_complex(const BlockMatrix& m) {
  Eigen::MatrixXcd z(m.rows() / 2, m.cols() / 2);
  for (Index r = 0; r < z.rows(); ++r)
    for (Index c = 0; c < z.cols(); ++c) z(r, c) = {m(2 * r, 2 * c), m(2 * r + 1, 2 * c)};
  return z;
}

BlockMatrix from_complex(const Eigen::MatrixXcd& z) {
  BlockMatrix m(2 * z.rows(), 2 * z.cols());
  for (Index r = 0; r < z.rows(); ++r) {
    for (Index c = 0; c < z.cols(); ++c) {
      const double a = z(r, c).real();
      const double b = z(r, c).imag();
      m(2 * r, 2 * c) = a;
      m(2 * r, 2 * c + 1) = -b;
      m(2 * r + 1, 2 * c) = b;
      m(2 * r + 1, 2 * c + 1) = a;
    }
  }
  return m;
}

Eigen::VectorXcd to_complex_vector(const Vec& x) {
  Eigen::VectorXcd z(x.size() / 2);
  for (Index i = 0; i < z.size(); ++i) z[i] = {x[2 * i], x[2 * i + 1]};
  return z;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w < 0) w += two_pi;
  w -= std::numbers::pi;
  // fmod rounding can land exactly on +pi
  if (w >= std::numbers::pi) w -= two_pi;
  return w;
}

}  // namespace phsync::algebra
