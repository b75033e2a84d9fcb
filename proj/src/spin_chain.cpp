#include "qfidyn/spin_chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qfidyn {

namespace {

// bit of site k (1-based, site 1 = MSB) inside an n_sites-bit index
inline int site_bit(int n, int n_sites, int k) { return (n >> (n_sites - k)) & 1; }
// sigma^z value: up (bit 0) -> +1, down (bit 1) -> -1
inline double zval(int n, int n_sites, int k) { return 1.0 - 2.0 * site_bit(n, n_sites, k); }
inline int flip(int n, int n_sites, int k) { return n ^ (1 << (n_sites - k)); }

// shared assembly for the full chain and its pieces
Matrix assemble(const SpinChainSpec& s, bool with_system, bool with_bath, bool with_coupling) {
  validate(s);
  const int d = s.dim();
  const int nsys = s.n_system;
  Matrix h = Matrix::Zero(d, d);
  for (int n = 0; n < d; ++n) {
    double diag = 0.0;
    if (with_system)
      for (int k = 1; k <= nsys; ++k) diag += s.field_b * zval(n, s.n_sites, k);
    if (with_coupling)
      for (int k = 1; k <= nsys; ++k)
        diag += s.jz_sb * zval(n, s.n_sites, k) * zval(n, s.n_sites, s.couple_sites[k - 1]);
    h(n, n) += diag;
    if (with_bath) {
      for (int k = nsys + 1; k <= s.n_sites; ++k)
        h(flip(n, s.n_sites, k), n) += s.bath_bx;  // sigma^x
      for (int k = nsys + 1; k < s.n_sites; ++k)   // flip-flop on (k, k+1)
        if (site_bit(n, s.n_sites, k) != site_bit(n, s.n_sites, k + 1))
          h(flip(flip(n, s.n_sites, k), s.n_sites, k + 1), n) += s.bath_jx;
    }
    if (with_coupling)
      for (int k = 1; k <= nsys; ++k) {
        const int r = s.couple_sites[k - 1];
        if (site_bit(n, s.n_sites, k) != site_bit(n, s.n_sites, r))
          h(flip(flip(n, s.n_sites, k), s.n_sites, r), n) += s.jx_sb;
      }
  }
  return h;
}

}  // namespace

void validate(const SpinChainSpec& s) {
  if (s.n_sites < 2 || s.n_sites > 15)
    throw InputError("spin chain: n_sites must be in [2, 15]");
  if (s.n_system < 1 || s.n_system >= s.n_sites)
    throw InputError("spin chain: n_system must be in [1, n_sites)");
  if (static_cast<int>(s.couple_sites.size()) != s.n_system)
    throw InputError("spin chain: couple_sites must list one bath site per system spin");
  for (int r : s.couple_sites)
    if (r <= s.n_system || r > s.n_sites)
      throw InputError("spin chain: couple site " + std::to_string(r) + " is not a bath site");
  for (double c : {s.field_b, s.bath_bx, s.bath_jx, s.jz_sb, s.jx_sb})
    if (!std::isfinite(c)) throw InputError("spin chain: non-finite coupling");
}

ComplexMatrix pauli_site(int n_sites, int site, char axis) {
  if (n_sites < 1 || n_sites > 15) throw InputError("pauli_site: n_sites out of range");
  if (site < 1 || site > n_sites) throw InputError("pauli_site: site out of range");
  const int d = 1 << n_sites;
  ComplexMatrix p = ComplexMatrix::Zero(d, d);
  for (int n = 0; n < d; ++n) {
    switch (axis) {
      case 'z':
        p(n, n) = zval(n, n_sites, site);
        break;
      case 'x':
        p(flip(n, n_sites, site), n) = 1.0;
        break;
      case 'y':
        // <m|sigma^y|n>: -i on raising (down->up), +i on lowering
        p(flip(n, n_sites, site), n) =
            site_bit(n, n_sites, site) ? complexd(0.0, -1.0) : complexd(0.0, 1.0);
        break;
      case '+':  // raising: down -> up only
        if (site_bit(n, n_sites, site)) p(flip(n, n_sites, site), n) = 1.0;
        break;
      case '-':  // lowering: up -> down only
        if (!site_bit(n, n_sites, site)) p(flip(n, n_sites, site), n) = 1.0;
        break;
      default:
        throw InputError("pauli_site: axis must be one of x, y, z, +, -");
    }
  }
  return p;
}

Matrix build_hamiltonian(const SpinChainSpec& s) { return assemble(s, true, true, true); }
Matrix build_h0(const SpinChainSpec& s) { return assemble(s, true, true, false); }

Matrix build_bath_hamiltonian(const SpinChainSpec& s) {
  // the bath reindexed as a standalone chain (site 1 = first bath site)
  validate(s);
  const int d = s.bath_dim();
  const int nb = s.n_sites - s.n_system;
  Matrix h = Matrix::Zero(d, d);
  for (int n = 0; n < d; ++n) {
    for (int k = 1; k <= nb; ++k) h(flip(n, nb, k), n) += s.bath_bx;
    for (int k = 1; k < nb; ++k)
      if (site_bit(n, nb, k) != site_bit(n, nb, k + 1))
        h(flip(flip(n, nb, k), nb, k + 1), n) += s.bath_jx;
  }
  return h;
}

Vector h0_prime_diag(const SpinChainSpec& s) {
  validate(s);
  Vector d(s.dim());
  for (int n = 0; n < s.dim(); ++n) {
    double z = 0.0;
    for (int k = 1; k <= s.n_system; ++k) z += zval(n, s.n_sites, k);
    d(n) = z;
  }
  return d;
}

Vector antiferromagnetic_state(int n_sites, int n_system) {
  if (n_sites < 2 || n_system < 1 || n_system >= n_sites)
    throw InputError("antiferromagnetic_state: bad sizes");
  int idx = 0;
  for (int k = n_system + 1; k <= n_sites; ++k)
    if (k % 2 == 0) idx |= 1 << (n_sites - k);  // alternating bath: even sites down
  Vector psi = Vector::Zero(1 << n_sites);
  psi(idx) = 1.0;
  return psi;
}

Vector h0_eigenstate(const EigenSystem& h0_sys, int alpha) {
  if (alpha < 0 || alpha >= h0_sys.dim()) throw InputError("h0_eigenstate: index out of range");
  return h0_sys.eigenvectors.col(alpha);
}

Vector x_polarized_state(const SpinChainSpec& s, const EigenSystem& bath_sys, int bath_index) {
  validate(s);
  if (bath_sys.dim() != s.bath_dim())
    throw InputError("x_polarized_state: bath eigensystem has wrong dimension");
  if (bath_index < 0 || bath_index >= s.bath_dim())
    throw InputError("x_polarized_state: bath index out of range");
  const int d = s.dim();
  const int db = s.bath_dim();
  const double amp = std::pow(2.0, -0.5 * s.n_system);
  Vector psi(d);
  for (int n = 0; n < d; ++n) psi(n) = amp * bath_sys.eigenvectors(n % db, bath_index);
  return psi;
}

double DensityOfStates::operator()(double e) const {
  const auto nb = bin_centers.size();
  if (nb == 0) return 0.0;
  if (e <= bin_centers(0) || e >= bin_centers(nb - 1)) {
    // exact hits on the end centers still count
    if (e == bin_centers(0)) return density(0);
    if (e == bin_centers(nb - 1)) return density(nb - 1);
    return 0.0;
  }
  const double* begin = bin_centers.data();
  const auto hi = std::upper_bound(begin, begin + nb, e) - begin;
  const double t = (e - bin_centers(hi - 1)) / (bin_centers(hi) - bin_centers(hi - 1));
  return (1.0 - t) * density(hi - 1) + t * density(hi);
}

double DensityOfStates::integral() const {
  if (bin_centers.size() < 2) return 0.0;
  // histogram mass: each bin holds density * width states, so this recovers
  // the level count exactly (trapezoid between centers would drop the two
  // outer half bins)
  const double width = bin_centers(1) - bin_centers(0);
  return density.sum() * width;
}

DensityOfStates density_of_states(const Vector& eigenvalues, int n_bins) {
  const auto n = eigenvalues.size();
  if (n < 2) throw InputError("density_of_states: need at least two eigenvalues");
  std::vector<double> e(eigenvalues.data(), eigenvalues.data() + n);
  std::sort(e.begin(), e.end());
  const double lo = e.front(), hi = e.back();
  if (hi <= lo) throw InputError("density_of_states: degenerate spectrum range");
  if (n_bins <= 0) {
    const double q1 = e[static_cast<size_t>(0.25 * (n - 1))];
    const double q3 = e[static_cast<size_t>(0.75 * (n - 1))];
    const double width = 2.0 * (q3 - q1) / std::cbrt(static_cast<double>(n));
    n_bins = width > 0.0 ? static_cast<int>(std::ceil((hi - lo) / width)) : 50;
    n_bins = std::clamp(n_bins, 10, 400);
  }
  const double bw = (hi - lo) / n_bins;
  DensityOfStates dos;
  dos.bin_centers.resize(n_bins);
  dos.density = Vector::Zero(n_bins);
  for (int b = 0; b < n_bins; ++b) dos.bin_centers(b) = lo + (b + 0.5) * bw;
  for (double ev : e) {
    int b = std::min(static_cast<int>((ev - lo) / bw), n_bins - 1);
    dos.density(b) += 1.0;
  }
  dos.density /= bw;
  return dos;
}

}  // namespace qfidyn
