#include "capa/linalg.hpp"

#include <cmath>

#include "capa/errors.hpp"

namespace capa {

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& a) {
  return 0.5 * (a + a.adjoint());
}

Eigen::MatrixXcd hermitian_solve(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                                 bool* jitter_applied) {
  const Eigen::MatrixXcd h = hermitian_part(a);
  Eigen::LLT<Eigen::MatrixXcd> llt(h);
  if (llt.info() == Eigen::Success) return llt.solve(b);

  const double dim = static_cast<double>(h.rows());
  const double jitter = 1e-12 * std::abs(h.trace().real()) / dim;
  Eigen::MatrixXcd shifted = h;
  shifted.diagonal().array() += jitter;
  llt.compute(shifted);
  if (llt.info() != Eigen::Success) {
    throw SingularKernelError("Hermitian solve failed even after diagonal jitter");
  }
  if (jitter_applied) *jitter_applied = true;
  return llt.solve(b);
}

double log_det_hpd(const Eigen::MatrixXcd& a) {
  Eigen::LLT<Eigen::MatrixXcd> llt(hermitian_part(a));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("log det of a matrix that is not positive definite");
  }
  double acc = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i).real());
  return 2.0 * acc;
}

Eigen::MatrixXcd general_solve(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  if (!(lu.rcond() >= 1e-14)) {
    throw SingularKernelError("finite-rank correction (I + G) is numerically singular");
  }
  return lu.solve(b);
}

}  // namespace capa
