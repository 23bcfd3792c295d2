#pragma once

#include <complex>

#include "phsync/types.hpp"

// Real 2x2-block realization of complex arithmetic: rotations, the block
// imaginary unit j = I (x) [[0,-1],[1,0]], Kronecker expansion with I2, and the
// power-invariant Clarke projection.
namespace phsync::algebra {

/// blkdiag(R_{theta_i}) with R_a = [[cos a, -sin a], [sin a, cos a]].
BlockMatrix rotation_block(const Vec& theta);

/// Same as rotation_block(theta) * x without forming the matrix.
Vec rotate(const Vec& theta, const Vec& x);
/// rotation_block(theta)^T * x.
Vec rotate_transpose(const Vec& theta, const Vec& x);
/// Every 2-block of x rotated by the same angle.
Vec rotate_uniform(double angle, const Vec& x);

/// I_k (x) j. Throws std::invalid_argument for k < 1.
BlockMatrix kron_j(Index k);

/// Applies I (x) j to a stacked vector of 2-blocks.
Vec apply_j(const Vec& x);

/// d (x) I2.
BlockMatrix kron_expand(const Mat& d);
/// diag(d) (x) I2.
BlockMatrix kron_expand_diag(const Vec& d);

/// diag(d) (x) e1 (2n x n): column i carries d_i in row 2i.
Mat embed_e1(const Vec& d);
/// diag(d) (x) e2 (2n x n): column i carries d_i in row 2i+1.
Mat embed_e2(const Vec& d);

/// First two rows of the power-invariant Clarke transformation, applied
/// column-wise to a 3 x k array of phase quantities.
Eigen::Matrix<double, 2, Eigen::Dynamic> clarke_project(
    const Eigen::Matrix<double, 3, Eigen::Dynamic>& z3);
Eigen::Vector2d clarke_project(const Eigen::Vector3d& z3);

/// True when every 2x2 block has the form [[a, -b], [b, a]] within tol
/// (scaled by the largest entry magnitude).
bool is_phasor_structured(const Mat& m, double tol = 1e-12);

// Complex views, used for cross-checks against scalar circuit arithmetic.
Eigen::MatrixXcd to_complex(const BlockMatrix& m);
BlockMatrix from_complex(const Eigen::MatrixXcd& m);
Eigen::VectorXcd to_complex_vector(const Vec& x);

/// Wraps an angle to [-pi, pi).
double wrap_angle(double a);

}  // namespace phsync::algebra
