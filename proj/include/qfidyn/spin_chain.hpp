#pragma once

#include <vector>

#include "qfidyn/linalg.hpp"

namespace qfidyn {

// Spin-1/2 chain with open boundaries. Sites are numbered 1..n_sites, site 1
// is the leftmost (most significant) tensor factor; bit 0 of a basis index is
// spin up. System spins sit on sites 1..n_system and carry the estimation
// parameter field_b through sigma^z; the rest is an XX bath in a transverse
// field; each system spin couples to one bath site (zz + flip-flop).
struct SpinChainSpec {
  int n_sites = 12;
  int n_system = 1;
  double field_b = 0.01;   // estimation parameter
  double bath_bx = 0.3;    // transverse field on bath sites
  double bath_jx = 1.0;    // bath nearest-neighbour flip-flop
  double jz_sb = 0.2;      // system-bath sigma^z sigma^z
  double jx_sb = 0.4;      // system-bath flip-flop
  std::vector<int> couple_sites = {5};  // bath site attached to each system spin

  int dim() const { return 1 << n_sites; }
  int bath_dim() const { return 1 << (n_sites - n_system); }
};

void validate(const SpinChainSpec& spec);

// single-site Pauli operator embedded in the full 2^n space (test/tooling aid;
// the builders below assemble matrix elements directly from bit patterns)
ComplexMatrix pauli_site(int n_sites, int site, char axis);

Matrix build_hamiltonian(const SpinChainSpec& spec);   // H = H_S + H_B + H_SB
Matrix build_h0(const SpinChainSpec& spec);            // H_S + H_B only
Matrix build_bath_hamiltonian(const SpinChainSpec& spec);  // H_B on the bath subspace

// diagonal of dH/d(field_b) = sum over system spins of sigma^z
Vector h0_prime_diag(const SpinChainSpec& spec);

// |up..up>_S tensor alternating bath (down on even-numbered sites): basis vector
Vector antiferromagnetic_state(int n_sites, int n_system);

// eigenstate alpha (ascending order) of a previously diagonalized H0
Vector h0_eigenstate(const EigenSystem& h0_sys, int alpha);

// |+x>^(n_system) tensor bath eigenstate: the Ramsey-style probe with unit
// initial variance of sigma^z on each system spin
Vector x_polarized_state(const SpinChainSpec& spec, const EigenSystem& bath_sys,
                         int bath_index);

// Histogrammed level density (states per unit energy) with linear
// interpolation between bin centers, zero outside the sampled range.
struct DensityOfStates {
  Vector bin_centers;
  Vector density;

  double operator()(double e) const;
  double integral() const;  // trapezoid; ~ total number of states
};

// n_bins = 0 selects the Freedman-Diaconis width
DensityOfStates density_of_states(const Vector& eigenvalues, int n_bins = 0);

}  // namespace qfidyn
