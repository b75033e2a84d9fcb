#pragma once

#include "qfidyn/linalg.hpp"

namespace qfidyn {

// Precomputed ingredients for exact dynamics of one (H, psi0, dH/dlambda)
// triple: the eigensystem of H, the initial amplitudes a0 in its eigenbasis,
// and dH/dlambda rotated to that basis.
struct EvolutionContext {
  EigenSystem sys;
  ComplexVector a0;
  Matrix h0p;

  int dim() const { return sys.dim(); }
};

EvolutionContext make_context(EigenSystem sys, const Vector& psi0, const Matrix& h0_prime);
// fast path for dH/dlambda diagonal in the computational basis
EvolutionContext make_context_diag(EigenSystem sys, const Vector& psi0,
                                   const Vector& h0_prime_diag);

// eigenbasis amplitudes exp(-i E_mu t) a0_mu
ComplexVector evolve_state(const EvolutionContext& ctx, double t);

// K(t) = exp(iHt) d_lambda exp(-iHt) in the eigenbasis:
//   K_rv = -i t (h0p)_rv exp(i theta_rv t) sinc(theta_rv t),
//   theta_rv = (E_r - E_v)/2.
// derivative_kernel materializes the matrix (small dims / cross-checks);
// derivative_kernel_apply streams K(t) a0 in O(dim^2) without storing K.
ComplexMatrix derivative_kernel(const EvolutionContext& ctx, double t);
ComplexVector derivative_kernel_apply(const EvolutionContext& ctx, double t);

// pure-state quantum Fisher information 4 (|K a0|^2 - |<a0|K a0>|^2)
double qfi_exact(const EvolutionContext& ctx, double t);
Vector qfi_exact(const EvolutionContext& ctx, const Vector& times);

// independent cross-check through the overlap of states evolved at
// neighbouring parameter values: 8 (1 - |<psi_a(t)|psi_b(t)>|) / delta^2,
// where sys_a, sys_b diagonalize H(lambda) and H(lambda + delta)
double qfi_fidelity_oracle(const EigenSystem& sys_a, const EigenSystem& sys_b,
                           const Vector& psi0, double t, double delta);
Vector qfi_fidelity_oracle(const EigenSystem& sys_a, const EigenSystem& sys_b,
                           const Vector& psi0, const Vector& times, double delta);

// <psi(t)| O |psi(t)> for O already rotated to the eigenbasis
Vector observable_evolution(const EvolutionContext& ctx, const Matrix& obs_eig,
                            const Vector& times);
// same, for a second state sharing the eigensystem (a0 in the eigenbasis)
Vector observable_evolution(const Vector& eigenvalues, const ComplexVector& a0,
                            const Matrix& obs_eig, const Vector& times);

// infinite-time average sum_mu |a0_mu|^2 O_mu for diagonal (eigenbasis) O
double diagonal_ensemble_average(const ComplexVector& a0, const Vector& obs_eig_diag);

// participation ratio 1 / sum_mu |a0_mu|^4
double effective_dimension(const ComplexVector& a0);

}  // namespace qfidyn
