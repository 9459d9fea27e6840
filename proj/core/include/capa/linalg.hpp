#pragma once

#include <complex>

#include <Eigen/Dense>

namespace capa {

/// (A + A^H) / 2
Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& a);

/// Solves A X = B for Hermitian positive (semi)definite A by Cholesky. If the
/// factorisation fails, 1e-12 * trace(A) / dim is added to the diagonal once
/// and `*jitter_applied` is set. Throws SingularKernelError if that also fails.
Eigen::MatrixXcd hermitian_solve(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                                 bool* jitter_applied = nullptr);

/// log det A for Hermitian positive definite A (natural log). Throws
/// NumericalError when A is not positive definite.
double log_det_hpd(const Eigen::MatrixXcd& a);

/// Solves a general square system with partial pivoting; throws
/// SingularKernelError when the reciprocal condition estimate is below 1e-14.
Eigen::MatrixXcd general_solve(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

}  // namespace capa
