#pragma once

#include <cstdint>
#include <vector>

#include "qfidyn/rmt.hpp"

namespace qfidyn {

// Ensemble statistics of the overlap coefficients c_mu(alpha) = <alpha|mu>
// between unperturbed levels (E_alpha = alpha omega, alpha = 1..N) and
// eigenstates of the perturbed model. Analytic moments below evaluate the
// Lorentzian envelope at the grid energies E_mu = mu omega, which is accurate
// in the bulk of the spectrum.

// <c_mu(a) c_mu(b) c_mu(a') c_mu(b')>: sum over the three Wick pairings
double four_point_same(int mu, int a, int b, int ap, int bp, double gamma, double omega);

// <c_mu(a) c_nu(b) c_mu(a') c_nu(b')>, mu != nu: Gaussian pairing minus the
// orthogonality-induced cross correction
double four_point_diff(int mu, int nu, int a, int b, int ap, int bp, double gamma,
                       double omega);

// sum_g Lambda(mu,g) Lambda(nu,g), closed form:
// 2 omega Gamma / pi / ((e_mu - e_nu)^2 + 4 Gamma^2)
double overlap_sum(double e_mu, double e_nu, double gamma, double omega);
// the same sum taken literally over the finite grid alpha = 1..n_levels
double overlap_sum_discrete(double e_mu, double e_nu, double gamma, double omega,
                            int n_levels);

struct McMoment {
  double mean = 0.0;
  double std_error = 0.0;
  int n_realizations = 0;
};

// A four-point index pattern relative to a running bulk eigenstate mu:
// nu = mu + dnu (ignored for same_state), arguments are levels mu + d*.
struct FourPointPattern {
  bool same_state = true;
  int dnu = 1;
  int da = 0, db = 0, dap = 0, dbp = 0;
};

// Monte-Carlo moments over GOE realizations, pooled over eigenstates mu in the
// central third of the spectrum; the standard error is taken across
// realizations (each realization contributes one pooled mean).
std::vector<McMoment> mc_four_point(const DeutschSpec& spec, int n_realizations,
                                    std::uint64_t seed,
                                    const std::vector<FourPointPattern>& patterns);

// single-realization pooled means (stream k of the master seed); the mc_
// estimators above average these across k
Vector four_point_realization(const DeutschSpec& spec, std::uint64_t seed,
                              std::uint64_t stream,
                              const std::vector<FourPointPattern>& patterns);
Vector overlap_profile_realization(const DeutschSpec& spec, std::uint64_t seed,
                                   std::uint64_t stream, int max_offset);

// pooled <c_mu(mu + k)^2> for k = -max_offset..max_offset (index 0 = -max_offset)
struct OverlapProfile {
  std::vector<int> offsets;
  Vector mean;
  Vector std_error;
};
OverlapProfile mc_overlap_profile(const DeutschSpec& spec, int n_realizations,
                                  std::uint64_t seed, int max_offset);

}  // namespace qfidyn
