#pragma once

#include "qfidyn/evolution.hpp"

namespace qfidyn {

// Classical Fisher information of the optimal projective measurement, built
// from the symmetric logarithmic derivative restricted to span{psi, dpsi}.
// For pure states this saturates the quantum bound.
double sld_cfi(const ComplexVector& psi, const ComplexVector& dpsi);
double sld_cfi(const EvolutionContext& ctx, double t);

// Classical Fisher information of the computational-basis population
// measurement, with probability sensitivities from central differences
// between dynamics at B + delta and B - delta.
struct PopulationProbe {
  EigenSystem sys_plus, sys_minus;
  Vector a_plus, a_minus;  // initial amplitudes in the two eigenbases
  double delta = 0.0;
  double p_floor = 1e-14;  // outcomes below this probability are dropped

  double cfi(double t) const;
  Vector cfi(const Vector& times) const;
};

PopulationProbe make_population_probe(EigenSystem sys_plus, EigenSystem sys_minus,
                                      const Vector& psi0, double delta,
                                      double p_floor = 1e-14);

// |cfi_delta - cfi_delta_half| / max(cfi_delta, tiny) at time t; values above
// 0.01 mean the finite difference is under-resolved and should be flagged
double population_cfi_delta_drift(const PopulationProbe& probe,
                                  const PopulationProbe& half_probe, double t);

}  // namespace qfidyn
