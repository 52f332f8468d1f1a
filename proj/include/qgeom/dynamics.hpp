#pragma once

// Step-wise unitary propagation of i d/dt psi = H(t) psi.

#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "qgeom/control.hpp"
#include "qgeom/errors.hpp"
#include "qgeom/qcore.hpp"

namespace qgeom {

enum class StepScheme {
  midpoint_exponential,  // exp(-i H(t + dt/2) dt), second order
  commutator_corrected,  // two-point Gauss Magnus expansion, fourth order
};

struct IntegratorConfig {
  double dt_max = std::numeric_limits<double>::infinity();
  int steps_per_fastest_period = 64;
  StepScheme scheme = StepScheme::midpoint_exponential;

  void validate() const {
    if (steps_per_fastest_period < 16) throw invalid_input("steps_per_fastest_period must be >= 16");
    if (!(dt_max > 0.0)) throw invalid_input("dt_max must be positive");
  }
};

inline IntegratorConfig lab_integrator() { return {std::numeric_limits<double>::infinity(), 64, StepScheme::midpoint_exponential}; }
inline IntegratorConfig effective_integrator() { return {std::numeric_limits<double>::infinity(), 256, StepScheme::midpoint_exponential}; }

template <class S>
concept HamiltonianSource = requires(const S& s, double t) {
  { s(t) } -> std::convertible_to<Hermitian2>;
  { s.fastest_period() } -> std::convertible_to<double>;
};

// Constant Hamiltonian as a source.
struct StaticSource {
  Hermitian2 H;
  Hermitian2 operator()(double) const { return H; }
  double fastest_period() const {
    const double n = H.field_norm();
    return n > 0.0 ? pi / n : std::numeric_limits<double>::infinity();
  }
};

// Wraps any callable with an explicit characteristic period.
template <class F>
struct FunctionSource {
  F f;
  double period;
  Hermitian2 operator()(double t) const { return f(t); }
  double fastest_period() const { return period; }
};

template <class F>
FunctionSource<F> make_source(F f, double period) {
  return {std::move(f), period};
}

namespace detail {

template <class S>
Hermitian2 checked_sample(const S& src, double t) {
  const Hermitian2 h = src(t);
  if (!h.finite()) {
    std::ostringstream os;
    os << "non-finite Hamiltonian sample at t=" << t;
    throw numerical_error(os.str());
  }
  return h;
}

// (h2 x h1).sigma, from [H2, H1] = 2i (h2 x h1).sigma
inline Hermitian2 cross(const Hermitian2& a, const Hermitian2& b) {
  return {0.0, a.hy * b.hz - a.hz * b.hy, a.hz * b.hx - a.hx * b.hz, a.hx * b.hy - a.hy * b.hx};
}

template <class S>
Unitary2 step(const S& src, double t, double dt, StepScheme scheme) {
  if (scheme == StepScheme::midpoint_exponential) return exponentiate(checked_sample(src, t + 0.5 * dt), dt);
  constexpr double c = 0.28867513459481287;  // sqrt(3)/6
  const Hermitian2 h1 = checked_sample(src, t + (0.5 - c) * dt);
  const Hermitian2 h2 = checked_sample(src, t + (0.5 + c) * dt);
  const Hermitian2 avg = 0.5 * (h1 + h2);
  const Hermitian2 corr = (c * dt) * cross(h2, h1);
  return exponentiate(avg + corr, dt);
}

template <class S>
std::size_t step_count(const S& src, double span, const IntegratorConfig& cfg) {
  if (span <= 0.0) return 0;
  double dt = cfg.dt_max;
  const double period = src.fastest_period();
  if (std::isfinite(period) && period > 0.0) dt = std::min(dt, period / cfg.steps_per_fastest_period);
  if (!std::isfinite(dt)) dt = span;
  return static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
}

}  // namespace detail

template <HamiltonianSource S>
SpinState propagate(const S& src, const SpinState& psi0, double t0, double t1, const IntegratorConfig& cfg = {}) {
  cfg.validate();
  if (!(t1 >= t0)) throw invalid_input("propagate: t1 must not precede t0");
  const std::size_t n = detail::step_count(src, t1 - t0, cfg);
  SpinState psi = psi0;
  if (n == 0) return psi;
  const double dt = (t1 - t0) / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    psi = detail::step(src, t, dt, cfg.scheme) * psi;
  }
  return psi;
}

// States at each of the increasing `times`, starting from psi0 at times.front().
template <HamiltonianSource S>
std::vector<SpinState> propagate_sampled(const S& src, const SpinState& psi0, std::span<const double> times,
                                         const IntegratorConfig& cfg = {}) {
  std::vector<SpinState> out;
  out.reserve(times.size());
  if (times.empty()) return out;
  SpinState psi = psi0;
  out.push_back(psi);
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw invalid_input("propagate_sampled: times must be strictly increasing");
    psi = propagate(src, psi, times[i - 1], times[i], cfg);
    out.push_back(psi);
  }
  return out;
}

// exp(+i K(t)) with K(t) = [omega_d t/2 - (A/2) int_0^t cos(theta_tau) dtau] sz.
// Maps lab-frame states onto the rotating frame of the effective Hamiltonian.
inline Unitary2 frame_operator(double t, const StaticParams& params, const ModulationSpec& spec, double omega0) {
  const double carrier = omega0 - params.r * params.A;
  const double k = carrier * t / 2.0 - phase_control_exact(spec, params, t) / 2.0;
  return exponentiate(Hermitian2{0.0, 0.0, 0.0, k}, -1.0);
}

inline SpinState frame_transform(const SpinState& psi_lab, double t, const StaticParams& params,
                                 const ModulationSpec& spec, double omega0) {
  return frame_operator(t, params, spec, omega0) * psi_lab;
}

}  // namespace qgeom
