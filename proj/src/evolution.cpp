#include "qfidyn/evolution.hpp"

#include <cmath>

namespace qfidyn {

namespace {

void check_state(const Vector& psi0, Eigen::Index dim) {
  if (psi0.size() != dim) throw InputError("evolution: state dimension mismatch");
  if (std::abs(psi0.norm() - 1.0) > 1e-10)
    throw InputError("evolution: initial state is not normalized");
}

ComplexVector phases(const Vector& e, double t) {
  ComplexVector p(e.size());
  for (Eigen::Index m = 0; m < e.size(); ++m) {
    const double x = e(m) * t;
    p(m) = complexd(std::cos(x), std::sin(x));
  }
  return p;
}

}  // namespace

EvolutionContext make_context(EigenSystem sys, const Vector& psi0, const Matrix& h0_prime) {
  check_state(psi0, sys.eigenvalues.size());
  EvolutionContext ctx;
  ctx.h0p = to_eigenbasis(h0_prime, sys.eigenvectors);
  ctx.a0 = (sys.eigenvectors.transpose() * psi0).cast<complexd>();
  ctx.sys = std::move(sys);
  return ctx;
}

EvolutionContext make_context_diag(EigenSystem sys, const Vector& psi0,
                                   const Vector& h0_prime_diag) {
  check_state(psi0, sys.eigenvalues.size());
  EvolutionContext ctx;
  ctx.h0p = to_eigenbasis_diag(h0_prime_diag, sys.eigenvectors);
  ctx.a0 = (sys.eigenvectors.transpose() * psi0).cast<complexd>();
  ctx.sys = std::move(sys);
  return ctx;
}

ComplexVector evolve_state(const EvolutionContext& ctx, double t) {
  ComplexVector a(ctx.dim());
  for (int m = 0; m < ctx.dim(); ++m) {
    const double x = -ctx.sys.eigenvalues(m) * t;
    a(m) = ctx.a0(m) * complexd(std::cos(x), std::sin(x));
  }
  return a;
}

// One row sum of (K a0): K_rv = -(h0p)_rv (exp(i (E_r - E_v) t) - 1)/(E_r - E_v),
// which equals the sinc form above; exp(i(E_r - E_v)t) is assembled from the
// per-level phases p = exp(i E t) so no trig is evaluated in the inner loop.
// Entries with |(E_r - E_v) t| < 1e-5 use the series of (e^{ix}-1)/(ix) instead,
// which also covers exact degeneracies and the diagonal.
ComplexVector derivative_kernel_apply(const EvolutionContext& ctx, double t) {
  const int d = ctx.dim();
  ComplexVector ka = ComplexVector::Zero(d);
  if (t == 0.0) return ka;
  const ComplexVector p = phases(ctx.sys.eigenvalues, t);
  const double* e = ctx.sys.eigenvalues.data();
  for (int r = 0; r < d; ++r) {
    const double er = e[r];
    const complexd pr = p(r);
    complexd acc(0.0, 0.0);
    // column r of the (symmetric) h0p is row r, and is contiguous in memory
    const double* hcol = ctx.h0p.data() + static_cast<std::ptrdiff_t>(r) * d;
    for (int v = 0; v < d; ++v) {
      const double h = hcol[v];
      const double de = er - e[v];
      const double x = de * t;
      complexd w;
      if (std::abs(x) < 1e-5)
        w = complexd(0.0, t) * cis_ratio(x);
      else
        w = (pr * std::conj(p(v)) - 1.0) / de;
      acc += h * w * ctx.a0(v);
    }
    ka(r) = -acc;
  }
  return ka;
}

ComplexMatrix derivative_kernel(const EvolutionContext& ctx, double t) {
  const int d = ctx.dim();
  ComplexMatrix k(d, d);
  for (int r = 0; r < d; ++r)
    for (int v = 0; v < d; ++v) {
      const double x = (ctx.sys.eigenvalues(r) - ctx.sys.eigenvalues(v)) * t;
      k(r, v) = complexd(0.0, -t) * ctx.h0p(r, v) * cis_ratio(x);
    }
  return k;
}

double qfi_exact(const EvolutionContext& ctx, double t) {
  if (t == 0.0) return 0.0;
  const ComplexVector ka = derivative_kernel_apply(ctx, t);
  const double n2 = ka.squaredNorm();
  const complexd ip = ctx.a0.dot(ka);
  return 4.0 * (n2 - std::norm(ip));
}

Vector qfi_exact(const EvolutionContext& ctx, const Vector& times) {
  Vector out(times.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) out(i) = qfi_exact(ctx, times(i));
  return out;
}

Vector qfi_fidelity_oracle(const EigenSystem& sys_a, const EigenSystem& sys_b,
                           const Vector& psi0, const Vector& times, double delta) {
  if (delta == 0.0 || !std::isfinite(delta)) throw InputError("fidelity oracle: bad delta");
  check_state(psi0, sys_a.eigenvalues.size());
  if (sys_b.eigenvalues.size() != sys_a.eigenvalues.size())
    throw InputError("fidelity oracle: eigensystem dimension mismatch");
  const Vector u = sys_a.eigenvectors.transpose() * psi0;
  const Vector v = sys_b.eigenvectors.transpose() * psi0;
  const Matrix w = sys_a.eigenvectors.transpose() * sys_b.eigenvectors;
  Vector out(times.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const double t = times(i);
    const ComplexVector y = phases(sys_b.eigenvalues, -t).cwiseProduct(v.cast<complexd>());
    ComplexVector wy(v.size());
    wy.real() = w * y.real();
    wy.imag() = w * y.imag();
    const ComplexVector c = phases(sys_a.eigenvalues, -t).cwiseProduct(u.cast<complexd>());
    const complexd overlap = c.dot(wy);
    out(i) = 8.0 * (1.0 - std::abs(overlap)) / (delta * delta);
  }
  return out;
}

double qfi_fidelity_oracle(const EigenSystem& sys_a, const EigenSystem& sys_b,
                           const Vector& psi0, double t, double delta) {
  Vector ts(1);
  ts(0) = t;
  return qfi_fidelity_oracle(sys_a, sys_b, psi0, ts, delta)(0);
}

Vector observable_evolution(const Vector& eigenvalues, const ComplexVector& a0,
                            const Matrix& obs_eig, const Vector& times) {
  if (obs_eig.rows() != a0.size() || obs_eig.cols() != a0.size() ||
      eigenvalues.size() != a0.size())
    throw InputError("observable_evolution: dimension mismatch");
  Vector out(times.size());
  ComplexVector a(a0.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const Vector ph = eigenvalues * times(i);
    a.real() = a0.real().cwiseProduct(ph.array().cos().matrix()) +
               a0.imag().cwiseProduct(ph.array().sin().matrix());
    a.imag() = a0.imag().cwiseProduct(ph.array().cos().matrix()) -
               a0.real().cwiseProduct(ph.array().sin().matrix());
    const Vector oar = obs_eig * a.real();
    const Vector oai = obs_eig * a.imag();
    out(i) = a.real().dot(oar) + a.imag().dot(oai);  // Re <a|O|a> for symmetric O
  }
  return out;
}

Vector observable_evolution(const EvolutionContext& ctx, const Matrix& obs_eig,
                            const Vector& times) {
  return observable_evolution(ctx.sys.eigenvalues, ctx.a0, obs_eig, times);
}

double diagonal_ensemble_average(const ComplexVector& a0, const Vector& obs_eig_diag) {
  if (a0.size() != obs_eig_diag.size())
    throw InputError("diagonal_ensemble_average: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index m = 0; m < a0.size(); ++m) acc += std::norm(a0(m)) * obs_eig_diag(m);
  return acc;
}

double effective_dimension(const ComplexVector& a0) {
  double p4 = 0.0;
  for (Eigen::Index m = 0; m < a0.size(); ++m) {
    const double p = std::norm(a0(m));
    p4 += p * p;
  }
  if (p4 <= 0.0) throw InputError("effective_dimension: zero state");
  return 1.0 / p4;
}

}  // namespace qfidyn
