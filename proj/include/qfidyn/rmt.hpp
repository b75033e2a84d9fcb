#pragma once

#include "qfidyn/linalg.hpp"
#include "qfidyn/rng.hpp"

namespace qfidyn {

// Random-matrix model: H = H0 + V with H0 = diag(alpha * omega), alpha = 1..N,
// and V a GOE perturbation of strength g. The estimation parameter is omega,
// so dH/d(omega) = diag(1..N).
struct DeutschSpec {
  int n_levels = 500;
  double omega = 1.0;  // unperturbed level spacing
  double g = 39.9;     // GOE strength; entry variance g^2 (1+delta_ab) / N
};

// symmetric GOE draw: <v_ab> = 0, <v_ab^2> = g^2 (1 + delta_ab) / n
Matrix sample_goe(int n, double g, Rng& rng);

Matrix build_deutsch_hamiltonian(const DeutschSpec& spec, Rng& rng);

// dH/d(omega) = diag(1..n)
Vector h0_prime_deutsch(int n);

// golden-rule half-width of the eigenstate envelope: pi g^2 / (n omega)
double gamma_width(double g, int n, double omega);

// Lorentzian envelope weight of unperturbed level at e_alpha inside the
// eigenstate at e_mu; normalized so the sum over an omega-spaced grid is ~1
double lorentzian_weight(double e_mu, double e_alpha, double gamma, double omega);

}  // namespace qfidyn
