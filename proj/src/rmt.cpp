#include "qfidyn/rmt.hpp"

#include <cmath>

namespace qfidyn {

Matrix sample_goe(int n, double g, Rng& rng) {
  if (n < 1) throw InputError("sample_goe: n must be positive");
  if (!(g >= 0.0) || !std::isfinite(g)) throw InputError("sample_goe: bad g");
  const double off = g / std::sqrt(static_cast<double>(n));
  const double diag = g * std::sqrt(2.0 / static_cast<double>(n));
  Matrix v(n, n);
  // fixed draw order (row-major upper triangle) keeps output seed-deterministic
  for (int i = 0; i < n; ++i) {
    v(i, i) = diag * rng.normal();
    for (int j = i + 1; j < n; ++j) {
      const double x = off * rng.normal();
      v(i, j) = x;
      v(j, i) = x;
    }
  }
  return v;
}

Matrix build_deutsch_hamiltonian(const DeutschSpec& spec, Rng& rng) {
  if (spec.omega <= 0.0) throw InputError("build_deutsch_hamiltonian: omega must be > 0");
  Matrix h = sample_goe(spec.n_levels, spec.g, rng);
  for (int a = 0; a < spec.n_levels; ++a) h(a, a) += spec.omega * (a + 1);
  return h;
}

Vector h0_prime_deutsch(int n) {
  return Vector::LinSpaced(n, 1.0, static_cast<double>(n));
}

double gamma_width(double g, int n, double omega) {
  if (!(g > 0.0) || n < 1 || omega <= 0.0)
    throw InputError("gamma_width: inputs must be positive");
  return M_PI * g * g / (n * omega);
}

double lorentzian_weight(double e_mu, double e_alpha, double gamma, double omega) {
  if (gamma <= 0.0 || omega <= 0.0) throw InputError("lorentzian_weight: gamma, omega must be > 0");
  const double de = e_mu - e_alpha;
  return omega * gamma / M_PI / (de * de + gamma * gamma);
}

}  // namespace qfidyn
