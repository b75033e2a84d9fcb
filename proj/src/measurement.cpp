#include "qfidyn/measurement.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace qfidyn {

double sld_cfi(const ComplexVector& psi, const ComplexVector& dpsi) {
  if (psi.size() != dpsi.size() || psi.size() == 0)
    throw InputError("sld_cfi: state and derivative sizes differ");

  // reduce to the two-dimensional span of {psi, dpsi}
  const complexd c = psi.dot(dpsi);
  ComplexVector w = dpsi - c * psi;
  const double s = w.norm();
  if (s < 1e-300) return 0.0;

  // in the basis {psi, w/s}: psi = (1,0), dpsi = (c,s), L = 2 d(rho)/dB
  Eigen::Matrix2d l_op;
  l_op << 4.0 * c.real(), 2.0 * s, 2.0 * s, 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(l_op);

  double cfi = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double l0 = es.eigenvectors()(0, i);
    const double l1 = es.eigenvectors()(1, i);
    const double p = l0 * l0;
    const double dp = 2.0 * (l0 * l0 * c.real() + l0 * l1 * s);
    if (p > 1e-30) cfi += dp * dp / p;
  }
  return cfi;
}

double sld_cfi(const EvolutionContext& ctx, double t) {
  // the shared diagonal evolution phase leaves all inner products unchanged
  const ComplexVector ka = derivative_kernel_apply(ctx, t);
  return sld_cfi(ctx.a0, ka);
}

PopulationProbe make_population_probe(EigenSystem sys_plus, EigenSystem sys_minus,
                                      const Vector& psi0, double delta, double p_floor) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw InputError("make_population_probe: delta must be positive and finite");
  if (sys_plus.dim() != sys_minus.dim() || psi0.size() != sys_plus.dim())
    throw InputError("make_population_probe: dimension mismatch");

  PopulationProbe probe;
  probe.a_plus = sys_plus.eigenvectors.transpose() * psi0;
  probe.a_minus = sys_minus.eigenvectors.transpose() * psi0;
  probe.sys_plus = std::move(sys_plus);
  probe.sys_minus = std::move(sys_minus);
  probe.delta = delta;
  probe.p_floor = p_floor;
  return probe;
}

namespace {

// computational-basis probabilities of V exp(-i E t) a for real V, a
Vector basis_populations(const EigenSystem& sys, const Vector& a, double t) {
  const Vector ph = sys.eigenvalues * t;
  const Vector br = a.cwiseProduct(ph.array().cos().matrix());
  const Vector bi = -a.cwiseProduct(ph.array().sin().matrix());
  const Vector pr = sys.eigenvectors * br;
  const Vector pi = sys.eigenvectors * bi;
  return pr.cwiseAbs2() + pi.cwiseAbs2();
}

}  // namespace

double PopulationProbe::cfi(double t) const {
  const Vector p_plus = basis_populations(sys_plus, a_plus, t);
  const Vector p_minus = basis_populations(sys_minus, a_minus, t);
  const double inv_2d = 1.0 / (2.0 * delta);

  double out = 0.0;
  for (int n = 0; n < p_plus.size(); ++n) {
    const double p = 0.5 * (p_plus(n) + p_minus(n));
    if (p <= p_floor) continue;
    const double dp = (p_plus(n) - p_minus(n)) * inv_2d;
    out += dp * dp / p;
  }
  return out;
}

Vector PopulationProbe::cfi(const Vector& times) const {
  Vector out(times.size());
  for (int i = 0; i < times.size(); ++i) out(i) = cfi(times(i));
  return out;
}

double population_cfi_delta_drift(const PopulationProbe& probe,
                                  const PopulationProbe& half_probe, double t) {
  const double full = probe.cfi(t);
  const double half = half_probe.cfi(t);
  return std::abs(full - half) / std::max(std::abs(full), 1e-300);
}

}  // namespace qfidyn
