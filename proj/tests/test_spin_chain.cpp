#include <doctest.h>

#include <cmath>

#include "qfidyn/linalg.hpp"
#include "qfidyn/rng.hpp"
#include "qfidyn/spin_chain.hpp"

using namespace qfidyn;

namespace {

SpinChainSpec small_spec() {
  SpinChainSpec s;
  s.n_sites = 6;
  s.n_system = 1;
  s.field_b = 0.01;
  s.bath_bx = 0.3;
  s.bath_jx = 1.0;
  s.jz_sb = 0.2;
  s.jx_sb = 0.4;
  s.couple_sites = {3};
  return s;
}

}  // namespace

TEST_CASE("validate rejects malformed specs") {
  SpinChainSpec s = small_spec();
  s.n_sites = 1;
  CHECK_THROWS_AS(validate(s), InputError);
  s = small_spec();
  s.couple_sites = {1};  // system site is not a bath site
  CHECK_THROWS_AS(validate(s), InputError);
  s = small_spec();
  s.couple_sites = {7};
  CHECK_THROWS_AS(validate(s), InputError);
  s = small_spec();
  s.couple_sites = {3, 4};
  CHECK_THROWS_AS(validate(s), InputError);
  s = small_spec();
  s.jx_sb = std::nan("");
  CHECK_THROWS_AS(validate(s), InputError);
  // duplicate couple sites are allowed for two system spins sharing a bath spin
  s = small_spec();
  s.n_system = 2;
  s.couple_sites = {4, 4};
  CHECK_NOTHROW(validate(s));
}

TEST_CASE("pauli_site single-site matrices") {
  const ComplexMatrix z = pauli_site(1, 1, 'z');
  CHECK(z(0, 0) == complexd(1.0, 0.0));
  CHECK(z(1, 1) == complexd(-1.0, 0.0));
  const ComplexMatrix x = pauli_site(1, 1, 'x');
  CHECK(x(0, 1) == complexd(1.0, 0.0));
  CHECK(x(1, 0) == complexd(1.0, 0.0));
  // sigma^z_1 sigma^z_2 on two sites = diag(1,-1,-1,1)
  const ComplexMatrix zz = pauli_site(2, 1, 'z') * pauli_site(2, 2, 'z');
  Vector expect(4);
  expect << 1.0, -1.0, -1.0, 1.0;
  for (int i = 0; i < 4; ++i) CHECK(zz(i, i).real() == expect(i));
  CHECK_THROWS_AS(pauli_site(2, 3, 'z'), InputError);
  CHECK_THROWS_AS(pauli_site(2, 1, 'q'), InputError);
}

TEST_CASE("pauli algebra: commutators, ladder operators") {
  const int n = 3;
  const ComplexMatrix x2 = pauli_site(n, 2, 'x');
  const ComplexMatrix z2 = pauli_site(n, 2, 'z');
  const ComplexMatrix z3 = pauli_site(n, 3, 'z');
  CHECK((x2 * z3 - z3 * x2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((x2 * z2 - z2 * x2).cwiseAbs().maxCoeff() == 2.0);
  // sigma^+ + sigma^- = sigma^x; [sigma^+, sigma^-] = sigma^z
  const ComplexMatrix sp = pauli_site(n, 1, '+');
  const ComplexMatrix sm = pauli_site(n, 1, '-');
  CHECK((sp + sm - pauli_site(n, 1, 'x')).cwiseAbs().maxCoeff() == 0.0);
  CHECK((sp * sm - sm * sp - pauli_site(n, 1, 'z')).cwiseAbs().maxCoeff() == 0.0);
  const ComplexMatrix y1 = pauli_site(n, 1, 'y');
  CHECK((sp - sm - complexd(0, 1) * y1).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("hamiltonian is real symmetric for random specs") {
  Rng rng(21);
  for (int c = 0; c < 50; ++c) {
    SpinChainSpec s;
    s.n_sites = 4 + static_cast<int>(rng.uniform() * 3);
    s.n_system = 1 + (rng.uniform() > 0.5 ? 1 : 0);
    s.field_b = rng.normal();
    s.bath_bx = rng.normal();
    s.bath_jx = rng.normal();
    s.jz_sb = rng.normal();
    s.jx_sb = rng.normal();
    s.couple_sites.clear();
    for (int k = 0; k < s.n_system; ++k)
      s.couple_sites.push_back(s.n_system + 1 +
                               static_cast<int>(rng.uniform() * (s.n_sites - s.n_system)));
    const Matrix h = build_hamiltonian(s);
    REQUIRE((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(h.allFinite());
  }
}

TEST_CASE("hamiltonian assembles from pauli operators") {
  const SpinChainSpec s = small_spec();
  const int n = s.n_sites;
  ComplexMatrix ref = ComplexMatrix::Zero(s.dim(), s.dim());
  ref += s.field_b * pauli_site(n, 1, 'z');
  for (int k = 2; k <= n; ++k) ref += s.bath_bx * pauli_site(n, k, 'x');
  for (int k = 2; k < n; ++k)
    ref += s.bath_jx * (pauli_site(n, k, '+') * pauli_site(n, k + 1, '-') +
                        pauli_site(n, k, '-') * pauli_site(n, k + 1, '+'));
  const int r = s.couple_sites[0];
  ref += s.jz_sb * pauli_site(n, 1, 'z') * pauli_site(n, r, 'z');
  ref += s.jx_sb * (pauli_site(n, 1, '+') * pauli_site(n, r, '-') +
                    pauli_site(n, 1, '-') * pauli_site(n, r, '+'));
  const Matrix h = build_hamiltonian(s);
  CHECK((ref.real() - h).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(ref.imag().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("decoupled limit: spectrum is +-B") {
  SpinChainSpec s;
  s.n_sites = 3;
  s.n_system = 1;
  s.field_b = 0.01;
  s.bath_bx = 0.0;
  s.bath_jx = 0.0;
  s.jz_sb = 0.0;
  s.jx_sb = 0.0;
  s.couple_sites = {2};
  const EigenSystem sys = eigh(build_hamiltonian(s));
  for (int i = 0; i < 4; ++i) CHECK(sys.eigenvalues(i) == doctest::Approx(-0.01));
  for (int i = 4; i < 8; ++i) CHECK(sys.eigenvalues(i) == doctest::Approx(0.01));
}

TEST_CASE("field derivative: H(B+d) - H(B-d) = 2d * diag(h0_prime)") {
  SpinChainSpec sp = small_spec(), sm = small_spec();
  const double d = 0.37;
  sp.field_b += d;
  sm.field_b -= d;
  const Matrix diff = build_hamiltonian(sp) - build_hamiltonian(sm);
  const Vector hp = h0_prime_diag(small_spec());
  CHECK((diff - Matrix(2.0 * d * hp.asDiagonal())).cwiseAbs().maxCoeff() < 1e-14);
  // h0_prime is independent of every other coupling
  SpinChainSpec other = small_spec();
  other.bath_bx = 7.0;
  other.bath_jx = -2.0;
  other.field_b = 100.0;
  CHECK((h0_prime_diag(other) - hp).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("h0_prime squared identities") {
  SpinChainSpec s = small_spec();
  const Vector hp1 = h0_prime_diag(s);
  CHECK((hp1.cwiseProduct(hp1) - Vector::Ones(s.dim())).cwiseAbs().maxCoeff() == 0.0);

  s.n_system = 2;
  s.couple_sites = {3, 5};
  const Vector hp2 = h0_prime_diag(s);
  const ComplexMatrix zz = pauli_site(s.n_sites, 1, 'z') * pauli_site(s.n_sites, 2, 'z');
  for (int i = 0; i < s.dim(); ++i)
    CHECK(hp2(i) * hp2(i) == doctest::Approx(2.0 + 2.0 * zz(i, i).real()));
}

TEST_CASE("h0 omits the system-bath coupling and conserves sigma_z1") {
  const SpinChainSpec s = small_spec();
  const Matrix h0 = build_h0(s);
  const Matrix h = build_hamiltonian(s);
  SpinChainSpec coupled_only = s;
  // difference must be exactly the coupling terms, nonzero
  CHECK((h - h0).cwiseAbs().maxCoeff() > 0.0);
  const ComplexMatrix z1 = pauli_site(s.n_sites, 1, 'z');
  const ComplexMatrix comm = z1 * h0.cast<complexd>() - h0.cast<complexd>() * z1;
  CHECK(comm.cwiseAbs().maxCoeff() == 0.0);
  (void)coupled_only;
}

TEST_CASE("bath hamiltonian equals h0 restricted to the bath block") {
  SpinChainSpec s = small_spec();
  s.field_b = 0.0;  // kill the system term so h0 = I tensor H_B
  const Matrix h0 = build_h0(s);
  const Matrix hb = build_bath_hamiltonian(s);
  const int db = s.bath_dim();
  // system spin up block (indices 0..db-1) must equal the bath hamiltonian
  CHECK((h0.topLeftCorner(db, db) - hb).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("antiferromagnetic state is the expected basis vector") {
  const Vector psi = antiferromagnetic_state(4, 1);
  REQUIRE(psi.size() == 16);
  CHECK(psi.cwiseAbs().sum() == 1.0);
  // site 1 up (system), bath down, up, down -> bits 0,1,0,1 -> index 5
  CHECK(psi(5) == 1.0);
  const Vector psi2 = antiferromagnetic_state(4, 2);
  // sites 1,2 up (system), bath up, down -> bits 0,0,0,1 -> index 1
  CHECK(psi2(1) == 1.0);
}

TEST_CASE("x-polarized state has unit sigma_z1 variance and bath energy") {
  const SpinChainSpec s = small_spec();
  const EigenSystem bath = eigh(build_bath_hamiltonian(s));
  const int bi = s.bath_dim() / 2;
  const Vector psi = x_polarized_state(s, bath, bi);
  REQUIRE(psi.size() == s.dim());
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const Vector z1 = [&] {
    Vector z(s.dim());
    for (int n = 0; n < s.dim(); ++n) z(n) = 1.0 - 2.0 * ((n >> (s.n_sites - 1)) & 1);
    return z;
  }();
  const double mean = psi.cwiseAbs2().dot(z1);
  const double m2 = psi.cwiseAbs2().dot(z1.cwiseProduct(z1));
  CHECK(std::abs(mean) < 1e-12);        // <sigma^z_1> = 0 for |+x>
  CHECK(m2 == doctest::Approx(1.0));    // variance 1
}

TEST_CASE("h0_eigenstate returns the requested eigenvector") {
  const SpinChainSpec s = small_spec();
  const EigenSystem h0_sys = eigh(build_h0(s));
  const Vector psi = h0_eigenstate(h0_sys, 5);
  CHECK((psi - h0_sys.eigenvectors.col(5)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(h0_eigenstate(h0_sys, -1), InputError);
  CHECK_THROWS_AS(h0_eigenstate(h0_sys, s.dim()), InputError);
}

TEST_CASE("density of states: uniform spectrum and normalization") {
  const int n = 4000;
  const double omega = 0.5;
  Vector ev(n);
  for (int i = 0; i < n; ++i) ev(i) = omega * i;
  const DensityOfStates dos = density_of_states(ev);
  // bulk density ~ 1/omega within 2%
  CHECK(dos(0.5 * omega * n) == doctest::Approx(1.0 / omega).epsilon(0.02));
  // integral ~ number of states within 1%
  CHECK(dos.integral() == doctest::Approx(static_cast<double>(n)).epsilon(0.01));
  // outside the sampled range the density vanishes
  CHECK(dos(-100.0) == 0.0);
  CHECK(dos(omega * n + 100.0) == 0.0);
}

TEST_CASE("density of states on a real chain integrates to the dimension") {
  SpinChainSpec s = small_spec();
  s.n_sites = 8;
  s.couple_sites = {4};
  const EigenSystem sys = eigh(build_hamiltonian(s));
  const DensityOfStates dos = density_of_states(sys.eigenvalues);
  CHECK(dos.integral() == doctest::Approx(256.0).epsilon(0.01));
}
