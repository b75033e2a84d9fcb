#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace qfidyn {

inline constexpr const char* kVersion = "0.1.0";

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using complexd = std::complex<double>;

// malformed caller input: wrong sizes, NaN/Inf, out-of-range parameters
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// an algorithm failed to converge or produced unusable output
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// sin(x)/x, even, sinc(0) = 1; series branch below |x| = 1e-4
double sinc(double x);

// (exp(ix) - 1) / (ix), the phase-averaged factor exp(ix/2) sinc(x/2)
complexd cis_ratio(double x);

}  // namespace qfidyn
