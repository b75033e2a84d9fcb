#pragma once

#include "qfidyn/common.hpp"

namespace qfidyn {

// Dense real-symmetric eigendecomposition result. Eigenvalues ascending,
// eigenvectors are the matching columns, orthonormal, each column's
// largest-magnitude component made positive (first such index on ties).
struct EigenSystem {
  Vector eigenvalues;
  Matrix eigenvectors;

  int dim() const { return static_cast<int>(eigenvalues.size()); }
};

// LAPACK dsyevd on an exactly symmetric matrix. Throws InputError on
// non-finite or asymmetric input, NumericalError if the solver fails.
EigenSystem eigh(const Matrix& h);

// largest-|component|-positive gauge, applied column by column in place
void fix_eigenvector_signs(Matrix& v);

Matrix kron(const Matrix& a, const Matrix& b);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// V^T M V
Matrix to_eigenbasis(const Matrix& m, const Matrix& v);
// V^T diag(d) V without forming diag(d)
Matrix to_eigenbasis_diag(const Vector& d, const Matrix& v);

}  // namespace qfidyn
