#pragma once

// Near-resonant Floquet reduction of the modulated Hamiltonian: Fourier blocks,
// rotating-wave two-level Hamiltonian, and the predicted resonance and Rabi frequency.
//
// Harmonic convention: H(t) = sum_n H_n exp(i n omega t).

#include <cmath>
#include <complex>
#include <vector>

#include "qgeom/control.hpp"
#include "qgeom/errors.hpp"
#include "qgeom/model.hpp"
#include "qgeom/qcore.hpp"

namespace qgeom {

struct FourierBlocks {
  int n_max = 0;
  std::vector<Mat2> blocks;  // index n + n_max

  const Mat2& operator[](int n) const {
    if (n < -n_max || n > n_max) throw invalid_input("FourierBlocks: harmonic index out of range");
    return blocks[static_cast<std::size_t>(n + n_max)];
  }
};

inline constexpr int fourier_points = 2048;

// Rectangle rule over one period (spectrally accurate for periodic integrands).
inline FourierBlocks fourier_blocks(const ModulationSpec& spec, const StaticParams& params, int n_max,
                                    int points = fourier_points) {
  if (n_max < 1) throw invalid_input("fourier_blocks: n_max must be >= 1");
  spec.validate();
  FourierBlocks fb;
  fb.n_max = n_max;
  fb.blocks.assign(static_cast<std::size_t>(2 * n_max + 1), Mat2::zero());
  for (int k = 0; k < points; ++k) {
    const double x = 2.0 * pi * k / points;
    const Mat2 h = effective_hamiltonian(spec, params, x / spec.omega).matrix();
    for (int n = -n_max; n <= n_max; ++n) {
      fb.blocks[static_cast<std::size_t>(n + n_max)] += h * std::polar(1.0 / points, -n * x);
    }
  }
  return fb;
}

// Closed form for phi-only modulation (a_theta = 0), in the same harmonic convention.
inline Mat2 phi_only_block(int n, double a_phi, double theta0, double phi0, double A, double r) {
  const double j = std::cyl_bessel_j(static_cast<double>(std::abs(n)), a_phi) * ((n < 0 && (n % 2 != 0)) ? -1.0 : 1.0);
  const double amp = 0.5 * A * std::sin(theta0);
  const double sign_n = (n % 2 == 0) ? 1.0 : -1.0;
  Mat2 m = Mat2::zero();
  m(0, 1) = amp * j * sign_n * std::polar(1.0, -phi0);
  m(1, 0) = amp * j * std::polar(1.0, phi0);
  if (n == 0) {
    m(0, 0) = 0.5 * A * (std::cos(theta0) + r);
    m(1, 1) = -m(0, 0);
  }
  return m;
}

// Two-level rotating-frame Hamiltonian in the {psi_plus, psi_minus} basis:
//   [[E+ - omega, <psi+|H_{-1}|psi->], [c.c., E-]]
inline Hermitian2 rwa_reduce(const FourierBlocks& blocks, double omega, const EigenSystem& basis) {
  if (basis.degenerate) throw precondition_error("rwa_reduce: degenerate eigenbasis");
  const double gap = basis.gap();
  if (!(std::abs(gap - omega) < gap / 2.0))
    throw precondition_error("rwa_reduce: modulation frequency is far from the transition");
  const cplx coupling = matrix_element(basis.psi_plus, blocks[-1], basis.psi_minus);
  return Hermitian2::from_entries(basis.e_plus - omega, coupling, basis.e_minus);
}

inline double predict_resonance(const ModulationSpec& spec, const StaticParams& params) {
  return spectral_gap(spec.theta0, params.A, params.r);
}

inline EigenSystem base_eigensystem(const ModulationSpec& spec, const StaticParams& params) {
  return eigensystem(hamiltonian(spec.theta0, spec.phi0, params.A, params.r));
}

// Population-oscillation angular frequency at resonance: 2 |coupling|.
inline double predict_rabi(const ModulationSpec& spec, const StaticParams& params) {
  const double w = predict_resonance(spec, params);
  const auto basis = base_eigensystem(spec, params);
  const auto blocks = fourier_blocks(spec.with_omega(w), params, 1);
  const Hermitian2 h = rwa_reduce(blocks, w, basis);
  return 2.0 * std::abs(h.entry(0, 1));
}

// First-order matrix-element form |<m| a_theta dH/dtheta + c a_phi dH/dphi |n>| with c = 1
// (linear) or c = +i (elliptical), for the tracked upper eigenstate n.
inline double rabi_first_order(const ModulationSpec& spec, const StaticParams& params) {
  const auto basis = base_eigensystem(spec, params);
  const Mat2 dT = dtheta_hamiltonian(spec.theta0, spec.phi0, params.A).matrix();
  const Mat2 dP = dphi_hamiltonian(spec.theta0, spec.phi0, params.A).matrix();
  const cplx c = spec.kind == ModulationKind::linear ? cplx{1.0, 0.0} : I;
  const Mat2 v = dT * cplx{spec.a_theta, 0.0} + dP * (c * spec.a_phi);
  return std::abs(matrix_element(basis.psi_minus, v, basis.psi_plus));
}

// Rabi frequency predicted from the geometric tensor:
//   Omega^2 / omega^2 = a_t^2 g_tt + a_p^2 g_pp + 2 a_t a_p g_tp        (linear)
//                     = a_t^2 g_tt + a_p^2 g_pp - a_t a_p F_tp          (elliptical, tracked state)
inline double rabi_from_geometry(const ModulationSpec& spec, const StaticParams& params) {
  const auto q = analytic_qgt(spec.theta0, params.r);
  const double w = spectral_gap(spec.theta0, params.A, params.r);
  const double at = spec.a_theta;
  const double ap = spec.a_phi;
  const double cross = spec.kind == ModulationKind::linear ? 2.0 * at * ap * q.g_tp : -at * ap * q.f_tp;
  const double s = at * at * q.g_tt + ap * ap * q.g_pp + cross;
  return w * std::sqrt(std::max(0.0, s));
}

}  // namespace qgeom
