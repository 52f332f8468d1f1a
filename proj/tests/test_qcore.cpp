#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qgeom/model.hpp"
#include "qgeom/qcore.hpp"

using namespace qgeom;

namespace {

oracle::M2 dense(const Hermitian2& h) {
  return {h.entry(0, 0), h.entry(0, 1), h.entry(1, 0), h.entry(1, 1)};
}

double max_diff(const Mat2& a, const oracle::M2& b) {
  double d = 0.0;
  for (int k = 0; k < 4; ++k) d = std::max(d, std::abs(a.m[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)]));
  return d;
}

Hermitian2 random_hermitian(std::mt19937_64& rng, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng), u(rng)};
}

}  // namespace

TEST(Exponentiate, ZeroHamiltonianIsIdentity) {
  for (double dt : {0.0, 1.0, -3.5, 1e9}) {
    const Unitary2 u = exponentiate(Hermitian2{}, dt);
    EXPECT_LT(max_abs_diff(u.m, Mat2::identity()), 1e-15);
  }
}

TEST(Exponentiate, HalfTurnAboutZ) {
  const double A = 2.0 * pi * 20e6;
  const Unitary2 u = exponentiate(0.5 * A * pauli::z, pi / A);
  EXPECT_NEAR(std::abs(u.m(0, 0) - std::polar(1.0, -pi / 2)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(u.m(1, 1) - std::polar(1.0, pi / 2)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(u.m(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(u.m(1, 0)), 0.0, 1e-15);
}

TEST(Exponentiate, MatchesTaylorOracle) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 200; ++k) {
    const Hermitian2 H = random_hermitian(rng);
    const Unitary2 u = exponentiate(H, 1.0);
    EXPECT_LT(max_diff(u.m, oracle::expm_taylor(dense(H), 1.0)), 1e-12);
    EXPECT_LT(u.unitarity_defect(), 1e-12);
  }
}

TEST(Exponentiate, RejectsNonFinite) {
  EXPECT_THROW(exponentiate(Hermitian2{0, std::nan(""), 0, 0}, 1.0), invalid_input);
  EXPECT_THROW(exponentiate(pauli::x, std::numeric_limits<double>::infinity()), invalid_input);
}

TEST(Exponentiate, PreservesNorm) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const SpinState psi = SpinState{cplx{n(rng), n(rng)}, cplx{n(rng), n(rng)}}.normalized();
    const SpinState out = exponentiate(random_hermitian(rng, 10.0), n(rng) * 10.0).apply(psi);
    EXPECT_NEAR(out.norm(), 1.0, 1e-12);
  }
}

TEST(Hermitian2, EntriesAreHermitian) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const Hermitian2 h = random_hermitian(rng);
    EXPECT_EQ(h.entry(1, 0), std::conj(h.entry(0, 1)));
    EXPECT_EQ(h.entry(0, 0).imag(), 0.0);
    EXPECT_EQ(h.entry(1, 1).imag(), 0.0);
    const Hermitian2 back = Hermitian2::from_entries(h.entry(0, 0).real(), h.entry(0, 1), h.entry(1, 1).real());
    EXPECT_LT(max_abs_diff(back, h), 1e-15);
  }
}

TEST(Eigensystem, DiagonalHamiltonian) {
  const double A = 2.0;
  const auto es = eigensystem(hamiltonian(0.0, 0.0, A, 0.0));
  EXPECT_DOUBLE_EQ(es.e_minus, -A / 2);
  EXPECT_DOUBLE_EQ(es.e_plus, A / 2);
  EXPECT_NEAR(fidelity(es.psi_plus, SpinState::up()), 1.0, 1e-15);
  EXPECT_EQ(es.psi_plus.c_up, cplx(1.0, 0.0));
}

TEST(Eigensystem, SigmaXEigenvector) {
  const auto es = eigensystem(hamiltonian(pi / 2, 0.0, 1.0, 0.0));
  EXPECT_NEAR(es.psi_plus.c_up.real(), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(std::abs(es.psi_plus.c_down - cplx(std::sqrt(0.5), 0.0)), 0.0, 1e-15);
}

TEST(Eigensystem, ShiftedGap) {
  const double A = 3.0;
  const auto es = eigensystem(hamiltonian(pi / 2, 0.0, A, 0.5));
  EXPECT_NEAR(es.gap(), A * std::sqrt(1.25), 1e-14);
}

TEST(Eigensystem, TrackedStateMatchesBlochForm) {
  for (double th : {0.1, 0.7, pi / 2, 2.0, 3.0})
    for (double ph : {0.0, 1.0, 4.0}) {
      const auto es = eigensystem(hamiltonian(th, ph, 1.0, 0.0));
      const SpinState n = SpinState::bloch(th, ph);
      EXPECT_NEAR(std::abs(es.psi_plus.c_up - n.c_up), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(es.psi_plus.c_down - n.c_down), 0.0, 1e-12);
    }
}

TEST(Eigensystem, ResidualOrderingGaugeAndReconstruction) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 500; ++k) {
    const Hermitian2 H = random_hermitian(rng);
    const auto es = eigensystem(H);
    ASSERT_FALSE(es.degenerate);
    EXPECT_LE(es.e_minus, es.e_plus);
    for (const auto& [E, v] : {std::pair{es.e_minus, es.psi_minus}, std::pair{es.e_plus, es.psi_plus}}) {
      const SpinState hv = H * v;
      const double res = std::hypot(std::abs(hv.c_up - E * v.c_up), std::abs(hv.c_down - E * v.c_down));
      EXPECT_LT(res, 1e-10 * std::abs(E) + 1e-12);
      EXPECT_EQ(v.c_up.imag(), 0.0);
      EXPECT_GE(v.c_up.real(), 0.0);
      EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    }
    const Mat2 rebuilt = projector(es.psi_minus) * cplx{es.e_minus, 0.0} + projector(es.psi_plus) * cplx{es.e_plus, 0.0};
    EXPECT_LT(max_abs_diff(rebuilt, H.matrix()), 1e-10);
  }
}

TEST(Eigensystem, GaugeWhenUpperComponentVanishes) {
  const auto es = eigensystem(-1.0 * pauli::z);
  EXPECT_EQ(es.psi_plus.c_up, cplx(0.0, 0.0));
  EXPECT_EQ(es.psi_plus.c_down, cplx(1.0, 0.0));
  EXPECT_EQ(es.psi_minus.c_up, cplx(1.0, 0.0));
}

TEST(Eigensystem, DeterministicGauge) {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 50; ++k) {
    const Hermitian2 H = random_hermitian(rng);
    const auto a = eigensystem(H);
    const auto b = eigensystem(H);
    EXPECT_EQ(a.psi_plus.c_up, b.psi_plus.c_up);
    EXPECT_EQ(a.psi_plus.c_down, b.psi_plus.c_down);
    EXPECT_EQ(a.psi_minus.c_up, b.psi_minus.c_up);
    EXPECT_EQ(a.psi_minus.c_down, b.psi_minus.c_down);
  }
}

TEST(Eigensystem, FlagsDegenerateSpectrum) {
  EXPECT_TRUE(eigensystem(Hermitian2{}).degenerate);
  EXPECT_TRUE(eigensystem(Hermitian2{1.0, 0.0, 0.0, 1e-14}).degenerate);
  EXPECT_FALSE(eigensystem(Hermitian2{1.0, 0.0, 0.0, 1e-9}).degenerate);
}

TEST(Fidelity, BasicCases) {
  const SpinState a = SpinState::bloch(0.4, 1.3);
  EXPECT_NEAR(fidelity(a, a), 1.0, 1e-15);
  EXPECT_NEAR(fidelity(SpinState::up(), SpinState::down()), 0.0, 1e-15);
  EXPECT_NEAR(fidelity(SpinState::up(), SpinState::bloch(pi / 3, 0.0)), 0.75, 1e-15);
  const SpinState b = SpinState::bloch(2.1, -0.3);
  EXPECT_DOUBLE_EQ(fidelity(a, b), fidelity(b, a));
}

TEST(Rotation, MapsPoleOntoBlochState) {
  for (double th : {0.0, 0.5, 2.5, pi})
    for (double ph : {0.0, 0.9, 5.0}) {
      const SpinState v = rotation(th, -std::sin(ph), std::cos(ph), 0.0).apply(SpinState::up());
      EXPECT_NEAR(fidelity(v, SpinState::bloch(th, ph)), 1.0, 1e-14);
    }
}
