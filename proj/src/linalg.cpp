#include "qfidyn/linalg.hpp"

#include <lapacke.h>

#include <cmath>
#include <string>

namespace qfidyn {

double sinc(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

complexd cis_ratio(double x) {
  if (std::abs(x) < 1e-5) {
    // 1 + ix/2 - x^2/6 - ix^3/24 + x^4/120
    const double x2 = x * x;
    return {1.0 - x2 / 6.0 + x2 * x2 / 120.0, x * 0.5 - x2 * x / 24.0};
  }
  const complexd num(std::cos(x) - 1.0, std::sin(x));
  return num / complexd(0.0, x);
}

EigenSystem eigh(const Matrix& h) {
  const auto n = h.rows();
  if (n == 0 || h.cols() != n) throw InputError("eigh: matrix must be square and non-empty");
  if (!h.allFinite()) throw InputError("eigh: matrix has non-finite entries");
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (h(i, j) != h(j, i)) throw InputError("eigh: matrix is not exactly symmetric");

  EigenSystem sys;
  sys.eigenvalues.resize(n);
  sys.eigenvectors = h;  // dsyevd overwrites the input with eigenvectors
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
                     sys.eigenvectors.data(), static_cast<lapack_int>(n),
                     sys.eigenvalues.data());
  if (info != 0)
    throw NumericalError("eigh: dsyevd failed, info=" + std::to_string(info) +
                         ", dim=" + std::to_string(n));
  fix_eigenvector_signs(sys.eigenvectors);
  return sys;
}

void fix_eigenvector_signs(Matrix& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index imax = 0;
    v.col(j).cwiseAbs().maxCoeff(&imax);
    if (v(imax, j) < 0.0) v.col(j) = -v.col(j);
  }
}

namespace {

template <typename Mat>
Mat kron_impl(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

Matrix kron(const Matrix& a, const Matrix& b) { return kron_impl(a, b); }
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) { return kron_impl(a, b); }

Matrix to_eigenbasis(const Matrix& m, const Matrix& v) {
  if (m.rows() != m.cols() || m.rows() != v.rows() || v.rows() != v.cols())
    throw InputError("to_eigenbasis: dimension mismatch");
  return v.transpose() * (m * v);
}

Matrix to_eigenbasis_diag(const Vector& d, const Matrix& v) {
  if (d.size() != v.rows() || v.rows() != v.cols())
    throw InputError("to_eigenbasis_diag: dimension mismatch");
  return v.transpose() * (d.asDiagonal() * v);
}

}  // namespace qfidyn
