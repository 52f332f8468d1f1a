#pragma once

// The static two-level family
//   H(theta, phi; A, r) = (A/2) [ (cos(theta) + r) sz + sin(theta) (cos(phi) sx + sin(phi) sy) ]
// with its closed-form quantum geometric tensor, spectral gap, eigenstate angle and
// Chern-number quadratures.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qgeom/errors.hpp"
#include "qgeom/qcore.hpp"
#include "qgeom/quadrature.hpp"

namespace qgeom {

struct StaticParams {
  double A = 2.0 * pi * 20e6;  // drive amplitude, rad/s
  double theta0 = pi / 2.0;
  double phi0 = 0.0;
  double r = 0.0;

  void validate() const {
    if (!std::isfinite(A) || !std::isfinite(theta0) || !std::isfinite(phi0) || !std::isfinite(r))
      throw invalid_input("static parameters must be finite");
    if (!(A > 0.0)) throw invalid_input("drive amplitude A must be positive");
    if (theta0 < 0.0 || theta0 > pi) throw invalid_input("theta0 must lie in [0, pi]");
    if (phi0 < 0.0 || phi0 >= 2.0 * pi) throw invalid_input("phi0 must lie in [0, 2 pi)");
    if (r < 0.0) throw invalid_input("r must be non-negative");
  }
};

// Fubini-Study metric and Berry curvature of the tracked eigenstate.
struct QGTComponents {
  double g_tt = 0.0;
  double g_pp = 0.0;
  double g_tp = 0.0;
  double f_tp = 0.0;

  double metric_det() const { return g_tt * g_pp - g_tp * g_tp; }
};

inline constexpr double degeneracy_tolerance = 1e-12;

// 1 + r^2 + 2 r cos(theta): squared gap in units of A.
inline double gap_factor_sq(double theta, double r) { return 1.0 + r * r + 2.0 * r * std::cos(theta); }

namespace detail {
inline double checked_gap_sq(double theta, double r, const char* who) {
  if (!std::isfinite(theta) || !std::isfinite(r)) throw invalid_input(std::string(who) + ": non-finite input");
  const double d = gap_factor_sq(theta, r);
  if (std::abs(d) < degeneracy_tolerance) {
    throw singularity_error(std::string(who) + ": closed gap at theta=" + std::to_string(theta) +
                            ", r=" + std::to_string(r));
  }
  return d;
}
}  // namespace detail

inline Hermitian2 hamiltonian(double theta, double phi, double A, double r = 0.0) {
  if (!std::isfinite(theta) || !std::isfinite(phi) || !std::isfinite(A) || !std::isfinite(r))
    throw invalid_input("hamiltonian: non-finite input");
  if (!(A > 0.0)) throw invalid_input("hamiltonian: A must be positive");
  const double h = A / 2.0;
  const double s = std::sin(theta);
  return {0.0, h * s * std::cos(phi), h * s * std::sin(phi), h * (std::cos(theta) + r)};
}

inline Hermitian2 hamiltonian(const StaticParams& p) { return hamiltonian(p.theta0, p.phi0, p.A, p.r); }

inline Hermitian2 dtheta_hamiltonian(double theta, double phi, double A) {
  const double h = A / 2.0;
  const double c = std::cos(theta);
  return {0.0, h * c * std::cos(phi), h * c * std::sin(phi), -h * std::sin(theta)};
}

inline Hermitian2 dphi_hamiltonian(double theta, double phi, double A) {
  const double h = A / 2.0;
  const double s = std::sin(theta);
  return {0.0, -h * s * std::sin(phi), h * s * std::cos(phi), 0.0};
}

// Single-shot gap E+ - E- in rad/s.
inline double spectral_gap(double theta, double A, double r) {
  return A * std::sqrt(detail::checked_gap_sq(theta, r, "spectral_gap"));
}

inline QGTComponents analytic_qgt(double theta, double r) {
  const double d = detail::checked_gap_sq(theta, r, "analytic_qgt");
  const double s = std::sin(theta);
  const double u = 1.0 + r * std::cos(theta);
  QGTComponents q;
  q.g_tt = u * u / (4.0 * d * d);
  q.g_pp = s * s / (4.0 * d);
  q.g_tp = 0.0;
  q.f_tp = s * u / (2.0 * d * std::sqrt(d));
  return q;
}

// Bloch polar angle of the tracked eigenstate of the r-shifted Hamiltonian, in [0, pi].
inline double eigenstate_angle(double theta, double r) {
  const double d = detail::checked_gap_sq(theta, r, "eigenstate_angle");
  const double c = std::clamp((std::cos(theta) + r) / std::sqrt(d), -1.0, 1.0);
  return std::acos(c);
}

// Integer Chern number this model should have for a given r (undefined at r == 1).
inline int chern_class(double r) {
  if (std::abs(r - 1.0) < 1e-12) throw singularity_error("chern_class: transition point r = 1");
  return r < 1.0 ? 1 : 0;
}

struct ChernResult {
  double value = 0.0;
  std::string rule = "composite-simpson";
  std::size_t points = 0;
  double step = 0.0;
};

// C = (1/2pi) * int_0^{2pi} dphi int_0^pi F dtheta, with the phi integral done analytically.
inline ChernResult chern_from_curvature(std::span<const double> theta, std::span<const double> f_tp,
                                        bool phi_independent = true) {
  if (!phi_independent) throw invalid_input("chern_from_curvature: only phi-independent curvature is supported");
  if (theta.size() != f_tp.size()) throw invalid_input("chern_from_curvature: grid and sample sizes differ");
  const auto grid = quad::check_simpson_grid(theta, 0.0, pi);
  ChernResult out;
  out.value = quad::simpson(f_tp, grid.step);
  out.points = grid.count;
  out.step = grid.step;
  return out;
}

// Chern number from the metric, integrand 2 sqrt(det g). Agrees with the curvature route only
// when the curvature does not change sign (r < 1).
inline ChernResult chern_from_metric(std::span<const double> theta, std::span<const QGTComponents> g) {
  if (theta.size() != g.size()) throw invalid_input("chern_from_metric: grid and sample sizes differ");
  const auto grid = quad::check_simpson_grid(theta, 0.0, pi);
  std::vector<double> integrand(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) integrand[i] = 2.0 * std::sqrt(std::max(0.0, g[i].metric_det()));
  ChernResult out;
  out.value = quad::simpson(integrand, grid.step);
  out.points = grid.count;
  out.step = grid.step;
  return out;
}

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t count) {
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  for (std::size_t i = 0; i < count; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  g.back() = hi;
  return g;
}

}  // namespace qgeom
