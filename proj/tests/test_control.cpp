#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qgeom/control.hpp"

using namespace qgeom;

namespace {

ModulationSpec make(ModulationKind k, double at, double ap, double w, double th = pi / 2, double ph = 0.0) {
  ModulationSpec s;
  s.kind = k;
  s.a_theta = at;
  s.a_phi = ap;
  s.omega = w;
  s.theta0 = th;
  s.phi0 = ph;
  return s;
}

StaticParams params(double th = pi / 2, double r = 0.0) {
  StaticParams p;
  p.theta0 = th;
  p.r = r;
  return p;
}

double max_bessel_error(const ModulationSpec& s, const StaticParams& p, int order, int samples = 400) {
  const BesselPhaseControl b(s, p, order);
  double err = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const double t = s.period() * k / samples;
    err = std::max(err, std::abs(b(t) - phase_control_exact(s, p, t)));
  }
  return err;
}

}  // namespace

TEST(Trajectory, ClosedFormValues) {
  const auto lin = make(ModulationKind::linear, 0.1, 0.2, 3.0, 1.0, 0.5);
  auto [t0, p0] = trajectory(lin, 0.0);
  EXPECT_EQ(t0, 1.0);
  EXPECT_EQ(p0, 0.5);
  const auto ell = make(ModulationKind::elliptical, 0.1, 0.2, 3.0, 1.0, 0.5);
  auto [t1, p1] = trajectory(ell, 0.0);
  EXPECT_EQ(t1, 1.0);
  EXPECT_DOUBLE_EQ(p1, 0.7);
  const auto fig = make(ModulationKind::linear, 0.1, 0.0, 2.0, 5 * pi / 6);
  EXPECT_NEAR(trajectory(fig, (pi / 2) / 2.0).first, 5 * pi / 6 + 0.1, 1e-15);
}

TEST(Trajectory, Periodicity) {
  for (auto k : {ModulationKind::linear, ModulationKind::elliptical}) {
    const auto s = make(k, 0.1, -0.07, 2.0 * pi * 20e6, 1.0, 0.3);
    const StaticParams p = params(1.0, 0.5);
    for (double t : {0.0, 1.3e-9, 7.7e-9, 33e-9}) {
      const auto a = trajectory(s, t);
      const auto b = trajectory(s, t + s.period());
      EXPECT_NEAR(a.first, b.first, 1e-12);
      EXPECT_NEAR(a.second, b.second, 1e-12);
      EXPECT_LT(max_abs_diff(effective_hamiltonian(s, p, t), effective_hamiltonian(s, p, t + s.period())), 1e-4);
    }
  }
}

TEST(Trajectory, ChiralityFlipIsTimeReversal) {
  const auto s = make(ModulationKind::elliptical, 0.1, 0.08, 5.0, 1.2, 0.4);
  const auto flipped = s.with_amplitudes(0.1, -0.08);
  for (double t = 0.0; t < 3.0; t += 0.173) {
    // reversal about the quarter period where the theta excursion peaks
    const auto a = trajectory(flipped, t);
    const auto b = trajectory(s, pi / s.omega - t);
    EXPECT_NEAR(a.first, b.first, 1e-12);
    EXPECT_NEAR(a.second, b.second, 1e-12);
  }
}

TEST(ModulationSpec, AmplitudeCapsAndWarnings) {
  EXPECT_NO_THROW(make(ModulationKind::linear, 0.3, 0.3, 1.0).validate());
  EXPECT_THROW(make(ModulationKind::linear, 0.31, 0.0, 1.0).validate(), invalid_input);
  EXPECT_THROW(make(ModulationKind::linear, 0.0, -0.4, 1.0).validate(), invalid_input);
  EXPECT_THROW(make(ModulationKind::linear, 0.1, 0.0, 0.0).validate(), invalid_input);
  EXPECT_TRUE(make(ModulationKind::linear, 0.1, 0.1, 1.0).warnings().empty());
  EXPECT_EQ(make(ModulationKind::linear, 0.2, 0.1, 1.0).warnings().size(), 1u);
}

TEST(PhaseControl, ConstantIntegrandIsLinear) {
  const StaticParams p = params(pi / 3);
  const auto s = make(ModulationKind::linear, 0.0, 0.1, p.A, pi / 3);
  for (double t : {0.0, 1e-9, 5e-8}) {
    EXPECT_NEAR(phase_control_exact(s, p, t), p.A * std::cos(pi / 3) * t, 1e-12);
    EXPECT_NEAR(phase_control_bessel(s, p, t), p.A * std::cos(pi / 3) * t, 1e-12);
  }
  EXPECT_THROW(phase_control_exact(s, p, -1.0), invalid_input);
}

TEST(PhaseControl, ExactMatchesSeriesOracle) {
  for (double th : {pi / 6, pi / 3, pi / 2, 2.5})
    for (double a : {0.02, 0.1, 0.3}) {
      const StaticParams p = params(th);
      const auto s = make(ModulationKind::linear, a, 0.0, 1.1 * p.A, th);
      for (int k = 0; k <= 40; ++k) {
        const double t = 3.0 * s.period() * k / 40;
        EXPECT_NEAR(phase_control_exact(s, p, t), oracle::phase_control_series(p.A, th, a, s.omega, t), 1e-9);
      }
    }
}

TEST(PhaseControl, LeadingBehaviourAtEquator) {
  const StaticParams p = params(pi / 2);
  const double a = 0.02;
  const auto s = make(ModulationKind::linear, a, 0.0, p.A, pi / 2);
  for (int k = 0; k <= 20; ++k) {
    const double t = s.period() * k / 20;
    const double half = std::sin(s.omega * t / 2);
    const double lead = -(4 * p.A / s.omega) * oracle::bessel_j(1, a) * half * half;
    // next odd harmonic bounds the remainder
    EXPECT_NEAR(phase_control_exact(s, p, t), lead, 4 * oracle::bessel_j(3, a) * p.A / (3 * s.omega) + 1e-12);
  }
}

TEST(PhaseControl, FullPeriodKeepsSecularTerm) {
  const StaticParams p = params(pi / 3);
  const auto s = make(ModulationKind::linear, 0.1, 0.0, 0.9 * p.A, pi / 3);
  const double T = s.period();
  EXPECT_NEAR(phase_control_exact(s, p, T), T * p.A * std::cos(pi / 3) * oracle::bessel_j(0, 0.1), 1e-10);
}

TEST(PhaseControl, OrderOneTruncationWithinBudget) {
  for (double th : {0.3, pi / 3, pi / 2, 2.6})
    for (double a : {0.01, 0.05, 0.1})
      for (double wr : {0.7, 1.0, 1.6}) {
        const StaticParams p = params(th);
        const auto s = make(ModulationKind::linear, a, 0.0, wr * p.A, th);
        EXPECT_LT(max_bessel_error(s, p, 1), 1e-3 * p.A * s.period());
      }
}

TEST(PhaseControl, HigherOrdersConverge) {
  const StaticParams p = params(pi / 3);
  for (double a : {0.1, 0.2, 0.3}) {
    const auto s = make(ModulationKind::linear, a, 0.0, p.A, pi / 3);
    EXPECT_LT(max_bessel_error(s, p, 3), max_bessel_error(s, p, 1));
    for (int k = 1; k <= 6; ++k) EXPECT_LE(max_bessel_error(s, p, k + 2), max_bessel_error(s, p, k) + 1e-12);
  }
  EXPECT_THROW(BesselPhaseControl(make(ModulationKind::linear, 0.1, 0, 1.0), p, 0), invalid_input);
}

TEST(LabDrive, InitialSampleAndHermiticity) {
  const StaticParams p = params(pi / 2);
  const double w0 = 100 * p.A;
  const auto s0 = make(ModulationKind::linear, 0.0, 0.0, p.A, pi / 2);
  const Hermitian2 h = lab_hamiltonian(s0, p, w0, 0.0);
  EXPECT_NEAR(h.entry(0, 1).real(), p.A, 1e-6);
  EXPECT_NEAR(h.hz, w0 / 2, 1e-6);
  const auto s = make(ModulationKind::elliptical, 0.1, 0.1, p.A, pi / 2);
  const LabDrive d(s, p, w0);
  for (double t = 0.0; t < 1e-7; t += 3.3e-9) {
    const Hermitian2 x = d(t);
    EXPECT_EQ(x.entry(1, 0), std::conj(x.entry(0, 1)));
    EXPECT_GE(d.sample(t).envelope, 0.0);
  }
  EXPECT_DOUBLE_EQ(d.carrier(), w0);
  StaticParams pr = p;
  pr.r = 0.5;
  EXPECT_DOUBLE_EQ(LabDrive(s, pr, w0).carrier(), w0 - 0.5 * p.A);
}

TEST(LabDrive, RegimeWarnings) {
  const double A = 1.0;
  EXPECT_EQ(rwa_warnings(5 * A, A).size(), 1u);
  EXPECT_NE(rwa_warnings(5 * A, A).front().find("not valid"), std::string::npos);
  EXPECT_EQ(rwa_warnings(20 * A, A).size(), 1u);
  EXPECT_TRUE(rwa_warnings(100 * A, A).empty());
  EXPECT_THROW(LabDrive(make(ModulationKind::linear, 0, 0, 1.0), params(), -1.0), invalid_input);
}

TEST(EffectiveHamiltonian, StaticLimits) {
  const StaticParams p = params(1.1, 0.5);
  const auto s0 = make(ModulationKind::elliptical, 0.0, 0.0, p.A, 1.1, 0.2);
  StaticParams q = p;
  q.phi0 = 0.2;
  for (double t : {0.0, 1e-9, 4.4e-8}) EXPECT_LT(max_abs_diff(effective_hamiltonian(s0, p, t), hamiltonian(q)), 1e-15);
  const auto lin = make(ModulationKind::linear, 0.1, 0.1, 2.0, 1.1, 0.2);
  EXPECT_LT(max_abs_diff(effective_hamiltonian(lin, p, pi / 2.0), hamiltonian(q)), 1e-12);
}

TEST(EffectiveHamiltonian, FirstOrderExpansion) {
  const double a = 1e-3;
  for (auto k : {ModulationKind::linear, ModulationKind::elliptical})
    for (double th : {0.4, pi / 2, 2.7}) {
      const StaticParams p = params(th, 0.5);
      const auto s = make(k, a, -a, p.A, th, 0.6);
      const double dnorm = p.A / 2;
      for (double t = 0.0; t < s.period(); t += s.period() / 13) {
        const double d = max_abs_diff(effective_hamiltonian(s, p, t), first_order_hamiltonian(s, p, t));
        EXPECT_LT(d, 2.0 * a * a * dnorm);
      }
    }
}
