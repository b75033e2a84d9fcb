#include "qfidyn/correlators.hpp"

#include <cmath>

#include "qfidyn/linalg.hpp"

namespace qfidyn {

namespace {

inline double lam(int i, int j, double gamma, double omega) {
  return lorentzian_weight(i * omega, j * omega, gamma, omega);
}

}  // namespace

double four_point_same(int mu, int a, int b, int ap, int bp, double gamma, double omega) {
  // Wick pairings (a,b)(a',b'), (a,a')(b,b'), (a,b')(b,a'); <c(x)c(y)> = Lambda delta_xy
  double acc = 0.0;
  if (a == b && ap == bp) acc += lam(mu, a, gamma, omega) * lam(mu, ap, gamma, omega);
  if (a == ap && b == bp) acc += lam(mu, a, gamma, omega) * lam(mu, b, gamma, omega);
  if (a == bp && b == ap) acc += lam(mu, a, gamma, omega) * lam(mu, b, gamma, omega);
  return acc;
}

double four_point_diff(int mu, int nu, int a, int b, int ap, int bp, double gamma,
                       double omega) {
  if (mu == nu) throw InputError("four_point_diff: states must differ");
  double acc = 0.0;
  if (a == ap && b == bp) acc += lam(mu, a, gamma, omega) * lam(nu, b, gamma, omega);
  if ((a == b && ap == bp) || (a == bp && ap == b)) {
    const double correction = lam(mu, a, gamma, omega) * lam(nu, b, gamma, omega) *
                              lam(mu, ap, gamma, omega) * lam(nu, bp, gamma, omega) /
                              overlap_sum(mu * omega, nu * omega, gamma, omega);
    if (a == b && ap == bp) acc -= correction;
    if (a == bp && ap == b) acc -= correction;
  }
  return acc;
}

double overlap_sum(double e_mu, double e_nu, double gamma, double omega) {
  if (gamma <= 0.0 || omega <= 0.0) throw InputError("overlap_sum: gamma, omega must be > 0");
  const double de = e_mu - e_nu;
  return 2.0 * omega * gamma / M_PI / (de * de + 4.0 * gamma * gamma);
}

double overlap_sum_discrete(double e_mu, double e_nu, double gamma, double omega,
                            int n_levels) {
  if (n_levels < 1) throw InputError("overlap_sum_discrete: n_levels must be positive");
  double acc = 0.0;
  for (int g = 1; g <= n_levels; ++g)
    acc += lorentzian_weight(e_mu, g * omega, gamma, omega) *
           lorentzian_weight(e_nu, g * omega, gamma, omega);
  return acc;
}

Vector four_point_realization(const DeutschSpec& spec, std::uint64_t seed,
                              std::uint64_t stream,
                              const std::vector<FourPointPattern>& patterns) {
  const int n = spec.n_levels;
  const int lo = n / 3, hi = 2 * n / 3;  // pooled bulk window
  Rng rng(seed, stream);
  const EigenSystem sys = eigh(build_deutsch_hamiltonian(spec, rng));
  const Matrix& v = sys.eigenvectors;  // v(alpha, mu) = c_mu(alpha), 0-based
  Vector out(static_cast<int>(patterns.size()));
  for (std::size_t ip = 0; ip < patterns.size(); ++ip) {
    const auto& pat = patterns[ip];
    double acc = 0.0;
    long cnt = 0;
    for (int mu = lo; mu < hi; ++mu) {
      const int nu = pat.same_state ? mu : mu + pat.dnu;
      const int a = mu + pat.da, b = mu + pat.db, ap = mu + pat.dap, bp = mu + pat.dbp;
      if (nu < 0 || nu >= n || a < 0 || a >= n || b < 0 || b >= n || ap < 0 || ap >= n ||
          bp < 0 || bp >= n)
        continue;
      acc += v(a, mu) * v(b, nu) * v(ap, mu) * v(bp, nu);
      ++cnt;
    }
    if (cnt == 0) throw InputError("four_point_realization: pattern leaves no valid bulk states");
    out(static_cast<int>(ip)) = acc / static_cast<double>(cnt);
  }
  return out;
}

Vector overlap_profile_realization(const DeutschSpec& spec, std::uint64_t seed,
                                   std::uint64_t stream, int max_offset) {
  const int n = spec.n_levels;
  if (max_offset < 0 || 2 * max_offset >= n / 3)
    throw InputError("overlap_profile_realization: offset window too wide for the bulk");
  const int lo = n / 3, hi = 2 * n / 3;
  const int nk = 2 * max_offset + 1;
  Rng rng(seed, stream);
  const EigenSystem sys = eigh(build_deutsch_hamiltonian(spec, rng));
  const Matrix& v = sys.eigenvectors;
  Vector out(nk);
  for (int j = 0; j < nk; ++j) {
    const int off = j - max_offset;
    double acc = 0.0;
    long cnt = 0;
    for (int mu = lo; mu < hi; ++mu) {
      const int a = mu + off;
      if (a < 0 || a >= n) continue;
      acc += v(a, mu) * v(a, mu);
      ++cnt;
    }
    out(j) = acc / static_cast<double>(cnt);
  }
  return out;
}

std::vector<McMoment> mc_four_point(const DeutschSpec& spec, int n_realizations,
                                    std::uint64_t seed,
                                    const std::vector<FourPointPattern>& patterns) {
  if (n_realizations < 2) throw InputError("mc_four_point: need at least 2 realizations");
  const int np = static_cast<int>(patterns.size());
  Vector sum = Vector::Zero(np), sum2 = Vector::Zero(np);
  for (int k = 0; k < n_realizations; ++k) {
    const Vector mean_k =
        four_point_realization(spec, seed, static_cast<std::uint64_t>(k), patterns);
    sum += mean_k;
    sum2 += mean_k.cwiseAbs2();
  }
  std::vector<McMoment> out(patterns.size());
  for (int ip = 0; ip < np; ++ip) {
    const double m = sum(ip) / n_realizations;
    const double var = std::max(sum2(ip) / n_realizations - m * m, 0.0);
    out[ip] = {m, std::sqrt(var / (n_realizations - 1)), n_realizations};
  }
  return out;
}

OverlapProfile mc_overlap_profile(const DeutschSpec& spec, int n_realizations,
                                  std::uint64_t seed, int max_offset) {
  if (n_realizations < 2) throw InputError("mc_overlap_profile: need at least 2 realizations");
  const int nk = 2 * max_offset + 1;
  Matrix per_real(nk, n_realizations);
  for (int k = 0; k < n_realizations; ++k)
    per_real.col(k) =
        overlap_profile_realization(spec, seed, static_cast<std::uint64_t>(k), max_offset);
  OverlapProfile prof;
  prof.offsets.resize(nk);
  prof.mean.resize(nk);
  prof.std_error.resize(nk);
  for (int j = 0; j < nk; ++j) {
    prof.offsets[j] = j - max_offset;
    const double m = per_real.row(j).mean();
    const double var = (per_real.row(j).array() - m).square().sum() / (n_realizations - 1);
    prof.mean(j) = m;
    prof.std_error(j) = std::sqrt(var / n_realizations);
  }
  return prof;
}

}  // namespace qfidyn
