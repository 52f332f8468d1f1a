#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qgeom/model.hpp"
#include "qgeom/quadrature.hpp"

using namespace qgeom;

TEST(Hamiltonian, ClosedFormCases) {
  const double A = 4.0;
  const Hermitian2 h = hamiltonian(pi / 2, 0.0, A, 0.0);
  EXPECT_LT(max_abs_diff(h, (A / 2) * pauli::x), 1e-15);
  const Hermitian2 g = hamiltonian(pi, 0.0, A, 0.5);
  EXPECT_NEAR(g.entry(0, 0).real(), -0.5 * A / 2, 1e-15);
  EXPECT_NEAR(g.entry(1, 1).real(), 0.5 * A / 2, 1e-15);
  EXPECT_NEAR(std::abs(g.entry(0, 1)), 0.0, 1e-15);
}

TEST(Hamiltonian, SpectrumMatchesGapFactor) {
  for (double r : {0.0, 0.3, 1.5})
    for (double th : {0.2, 1.1, 2.9}) {
      const double A = 2.0 * pi * 20e6;
      const auto es = eigensystem(hamiltonian(th, 0.7, A, r));
      const double e = 0.5 * A * std::sqrt(1 + r * r + 2 * r * std::cos(th));
      EXPECT_NEAR(es.e_plus, e, 1e-7);
      EXPECT_NEAR(es.e_minus, -e, 1e-7);
      EXPECT_NEAR(spectral_gap(th, A, r), 2 * e, 1e-6);
    }
}

TEST(Hamiltonian, RejectsBadInput) {
  EXPECT_THROW(hamiltonian(std::nan(""), 0, 1, 0), invalid_input);
  EXPECT_THROW(hamiltonian(1, 0, std::numeric_limits<double>::infinity(), 0), invalid_input);
  EXPECT_THROW(hamiltonian(1, 0, -1, 0), invalid_input);
  StaticParams p;
  p.theta0 = 4.0;
  EXPECT_THROW(p.validate(), invalid_input);
  p.theta0 = 1.0;
  p.r = -0.1;
  EXPECT_THROW(p.validate(), invalid_input);
}

TEST(AnalyticQgt, ReferenceValues) {
  auto q = analytic_qgt(pi / 2, 0.0);
  EXPECT_NEAR(q.g_tt, 0.25, 1e-15);
  EXPECT_NEAR(q.g_pp, 0.25, 1e-15);
  EXPECT_EQ(q.g_tp, 0.0);
  EXPECT_NEAR(q.f_tp, 0.5, 1e-15);
  q = analytic_qgt(pi, 0.5);
  EXPECT_NEAR(q.g_tt, 1.0, 1e-12);
  EXPECT_NEAR(q.f_tp, 0.0, 1e-12);
  q = analytic_qgt(pi / 2, 0.5);
  EXPECT_NEAR(q.g_pp, 0.2, 1e-15);
  EXPECT_NEAR(q.f_tp, 1.0 / (2.0 * std::pow(1.25, 1.5)), 1e-15);
  EXPECT_NEAR(q.f_tp, 0.3578, 1e-4);
}

TEST(AnalyticQgt, ReducesAtZeroShift) {
  for (double th = 0.05; th < pi; th += 0.1) {
    const auto q = analytic_qgt(th, 0.0);
    EXPECT_NEAR(q.g_tt, 0.25, 1e-15);
    EXPECT_NEAR(q.g_pp, std::sin(th) * std::sin(th) / 4, 1e-15);
    EXPECT_NEAR(q.f_tp, std::sin(th) / 2, 1e-15);
  }
}

TEST(AnalyticQgt, SingularAtClosedGap) {
  EXPECT_THROW(analytic_qgt(pi, 1.0), singularity_error);
  EXPECT_THROW(eigenstate_angle(pi, 1.0), singularity_error);
  EXPECT_THROW(spectral_gap(pi, 1.0, 1.0), singularity_error);
  EXPECT_NO_THROW(analytic_qgt(pi - 1e-3, 1.0));
}

TEST(AnalyticQgt, MatchesFiniteDifferenceDefinition) {
  for (double r : {0.0, 0.25, 0.5, 0.9, 1.1, 1.5, 2.0})
    for (int k = 1; k < 12; ++k) {
      const double th = pi * k / 12.0;
      const auto q = analytic_qgt(th, r);
      for (double ph : {0.0, 1.3}) {
        const auto o = oracle::finite_difference_qgt(th, ph, r);
        EXPECT_NEAR(q.g_tt, o.g_tt, 1e-6) << th << " " << r;
        EXPECT_NEAR(q.g_pp, o.g_pp, 1e-6) << th << " " << r;
        EXPECT_NEAR(q.g_tp, o.g_tp, 1e-6) << th << " " << r;
        EXPECT_NEAR(q.f_tp, o.f_tp, 1e-6) << th << " " << r;
      }
    }
}

TEST(AnalyticQgt, ComponentInvariants) {
  for (double r : {0.0, 0.5, 1.5})
    for (double th = 0.0; th <= pi; th += pi / 36) {
      const auto q = analytic_qgt(th, r);
      EXPECT_GE(q.g_tt, 0.0);
      EXPECT_GE(q.g_pp, 0.0);
      EXPECT_GE(q.metric_det(), -1e-12);
    }
}

TEST(AnalyticQgt, MonopoleIdentityAtZeroShift) {
  for (double th = 0.0; th <= pi; th += pi / 90) {
    const auto q = analytic_qgt(th, 0.0);
    EXPECT_NEAR(2.0 * std::sqrt(q.metric_det()), std::abs(q.f_tp), 1e-10);
  }
}

TEST(EigenstateAngle, Values) {
  for (double th : {0.0, 0.4, 2.0, pi}) EXPECT_NEAR(eigenstate_angle(th, 0.0), th, 1e-12);
  EXPECT_NEAR(eigenstate_angle(pi / 2, 0.5), std::acos(0.5 / std::sqrt(1.25)), 1e-15);
  EXPECT_NEAR(eigenstate_angle(pi / 2, 0.5), 1.1071, 1e-4);
  EXPECT_NEAR(eigenstate_angle(pi, 1.5), 0.0, 1e-7);
}

TEST(EigenstateAngle, TrackedStateIsUpperEigenvector) {
  for (double r : {0.0, 0.5, 1.5})
    for (double th : {0.3, 1.5, 2.8}) {
      const auto es = eigensystem(hamiltonian(th, 0.4, 1.0, r));
      EXPECT_NEAR(fidelity(es.psi_plus, SpinState::bloch(eigenstate_angle(th, r), 0.4)), 1.0, 1e-12);
    }
}

namespace {
std::vector<double> analytic_curvature(const std::vector<double>& grid, double r) {
  std::vector<double> f;
  for (double t : grid) f.push_back(analytic_qgt(t, r).f_tp);
  return f;
}
std::vector<QGTComponents> analytic_metric(const std::vector<double>& grid, double r) {
  std::vector<QGTComponents> g;
  for (double t : grid) g.push_back(analytic_qgt(t, r));
  return g;
}
}  // namespace

TEST(Chern, ExactCurvatureOnFineGrid) {
  const auto grid = uniform_grid(0.0, pi, 181);
  std::vector<double> f;
  for (double t : grid) f.push_back(std::sin(t) / 2);
  const auto c = chern_from_curvature(grid, f);
  EXPECT_NEAR(c.value, 1.0, 1e-6);
  EXPECT_EQ(c.rule, "composite-simpson");
  EXPECT_EQ(c.points, 181u);
  EXPECT_NEAR(c.step, pi / 180, 1e-15);
}

TEST(Chern, AnalyticCurvatureBothPhases) {
  const auto grid = uniform_grid(0.0, pi, 361);
  EXPECT_NEAR(chern_from_curvature(grid, analytic_curvature(grid, 0.5)).value, 1.0, 1e-4);
  EXPECT_NEAR(chern_from_curvature(grid, analytic_curvature(grid, 1.5)).value, 0.0, 1e-4);
}

TEST(Chern, ClassificationRounds) {
  const auto grid = uniform_grid(0.0, pi, 361);
  for (double r : {0.0, 0.25, 0.5, 0.75, 1.25, 1.5, 2.0}) {
    const double c = chern_from_curvature(grid, analytic_curvature(grid, r)).value;
    EXPECT_EQ(static_cast<int>(std::lround(c)), chern_class(r)) << r;
  }
  EXPECT_THROW(chern_class(1.0), singularity_error);
}

TEST(Chern, CoverageErrors) {
  const std::vector<double> one{0.0};
  const std::vector<double> f1{0.0};
  EXPECT_THROW(chern_from_curvature(one, f1), coverage_error);
  const auto half = uniform_grid(0.0, pi / 2, 11);
  EXPECT_THROW(chern_from_curvature(half, analytic_curvature(half, 0.0)), coverage_error);
  const auto even = uniform_grid(0.0, pi, 10);
  EXPECT_THROW(chern_from_curvature(even, analytic_curvature(even, 0.0)), invalid_input);
  const std::vector<double> uneven{0.0, 0.5, 1.0, 2.5, pi};
  EXPECT_THROW(chern_from_curvature(uneven, analytic_curvature(uneven, 0.0)), invalid_input);
  EXPECT_THROW(chern_from_curvature(uniform_grid(0, pi, 5), f1), invalid_input);
  EXPECT_THROW(chern_from_curvature(uniform_grid(0, pi, 5), analytic_curvature(uniform_grid(0, pi, 5), 0.0), false),
               invalid_input);
}

TEST(Chern, FromMetric) {
  const auto grid = uniform_grid(0.0, pi, 361);
  EXPECT_NEAR(chern_from_metric(grid, analytic_metric(grid, 0.0)).value, 1.0, 1e-4);
  EXPECT_NEAR(chern_from_metric(grid, analytic_metric(grid, 0.5)).value, 1.0, 1e-3);
  EXPECT_GT(std::abs(chern_from_metric(grid, analytic_metric(grid, 1.5)).value), 0.1);
}

TEST(Quadrature, AdaptiveSimpsonAccuracy) {
  const auto res = quad::adaptive_simpson([](double x) { return std::exp(std::sin(x)); }, 0.0, 2 * pi, 1e-12);
  // 2 pi I0(1)
  EXPECT_NEAR(res.value, 2 * pi * 1.2660658777520082, 1e-10);
  EXPECT_GE(res.evaluations, 1);
}

TEST(Quadrature, AdaptiveSimpsonReportsFailure) {
  EXPECT_THROW(quad::adaptive_simpson([](double x) { return 1.0 / std::sqrt(std::abs(x - 0.3)); }, 0.0, 1.0, 1e-14, 1, 8),
               numerical_error);
}
