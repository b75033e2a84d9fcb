#include <doctest.h>

#include <cmath>

#include "qfidyn/linalg.hpp"
#include "qfidyn/rng.hpp"

using namespace qfidyn;

namespace {

Matrix random_symmetric(int n, Rng& rng) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("eigh reconstructs and orthonormalizes across random sizes") {
  Rng rng(42);
  Rng size_rng(43);
  for (int c = 0; c < 400; ++c) {
    const int n = 2 + static_cast<int>(size_rng.uniform() * 63);
    const Matrix m = random_symmetric(n, rng);
    const EigenSystem sys = eigh(m);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const Matrix recon = sys.eigenvectors *
                         sys.eigenvalues.asDiagonal() *
                         sys.eigenvectors.transpose();
    REQUIRE((recon - m).cwiseAbs().maxCoeff() < 1e-11 * scale * n);
    const Matrix gram = sys.eigenvectors.transpose() * sys.eigenvectors;
    REQUIRE((gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12 * n);
    for (int i = 1; i < n; ++i) REQUIRE(sys.eigenvalues(i) >= sys.eigenvalues(i - 1));
  }
}

TEST_CASE("eigh handles larger dims" * doctest::description("slower")) {
  Rng rng(4242);
  for (int n : {128, 256}) {
    const Matrix m = random_symmetric(n, rng);
    const EigenSystem sys = eigh(m);
    const Matrix recon =
        sys.eigenvectors * sys.eigenvalues.asDiagonal() * sys.eigenvectors.transpose();
    CHECK((recon - m).cwiseAbs().maxCoeff() < 1e-10 * n);
  }
}

TEST_CASE("eigh on a known 2x2") {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  const EigenSystem sys = eigh(m);
  CHECK(sys.eigenvalues(0) == doctest::Approx(-1.0));
  CHECK(sys.eigenvalues(1) == doctest::Approx(1.0));
}

TEST_CASE("eigh sign gauge is deterministic") {
  Rng rng(5);
  const Matrix m = random_symmetric(17, rng);
  const EigenSystem a = eigh(m);
  const EigenSystem b = eigh(m);
  CHECK((a.eigenvectors - b.eigenvectors).cwiseAbs().maxCoeff() == 0.0);
  // gauge: the largest-magnitude component of each eigenvector is positive
  for (int j = 0; j < 17; ++j) {
    Eigen::Index imax;
    a.eigenvectors.col(j).cwiseAbs().maxCoeff(&imax);
    CHECK(a.eigenvectors(imax, j) > 0.0);
  }
}

TEST_CASE("eigh rejects non-symmetric and non-finite input") {
  Matrix m(2, 2);
  m << 0.0, 1.0, 2.0, 0.0;
  CHECK_THROWS_AS(eigh(m), InputError);
  m << 1.0, std::nan(""), std::nan(""), 1.0;
  CHECK_THROWS_AS(eigh(m), InputError);
  CHECK_THROWS_AS(eigh(Matrix(0, 0)), InputError);
}

TEST_CASE("kron matches the 2x2 hand result") {
  Matrix a(2, 2), b(2, 2);
  a << 1.0, 0.0, 0.0, -1.0;  // sigma_z
  b << 0.0, 1.0, 1.0, 0.0;   // sigma_x
  const Matrix k = kron(a, b);
  REQUIRE(k.rows() == 4);
  Matrix expect(4, 4);
  expect << 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, -1, 0, 0, -1, 0;
  CHECK((k - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kron is associative and multiplicative on random inputs") {
  Rng rng(9);
  const Matrix a = random_symmetric(3, rng), b = random_symmetric(2, rng),
               c = random_symmetric(2, rng);
  CHECK((kron(kron(a, b), c) - kron(a, kron(b, c))).cwiseAbs().maxCoeff() < 1e-12);
  // (A kron B)(A kron B) = A^2 kron B^2
  const Matrix lhs = kron(a, b) * kron(a, b);
  const Matrix rhs = kron(Matrix(a * a), Matrix(b * b));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("to_eigenbasis diagonalizes the source matrix") {
  Rng rng(13);
  const Matrix m = random_symmetric(24, rng);
  const EigenSystem sys = eigh(m);
  const Matrix rotated = to_eigenbasis(m, sys.eigenvectors);
  CHECK((rotated.diagonal() - sys.eigenvalues).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((rotated - Matrix(sys.eigenvalues.asDiagonal())).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("to_eigenbasis_diag equals dense rotation of a diagonal matrix") {
  Rng rng(14);
  const Matrix m = random_symmetric(16, rng);
  const EigenSystem sys = eigh(m);
  Vector d(16);
  for (int i = 0; i < 16; ++i) d(i) = rng.normal();
  const Matrix direct = sys.eigenvectors.transpose() *
                        Matrix(d.asDiagonal()) * sys.eigenvectors;
  CHECK((to_eigenbasis_diag(d, sys.eigenvectors) - direct).cwiseAbs().maxCoeff() < 1e-12);
}
