#pragma once

// Parametric modulation trajectories, the phase-control function f(t) and the
// lab-frame / effective-frame drive Hamiltonians.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qgeom/errors.hpp"
#include "qgeom/model.hpp"
#include "qgeom/qcore.hpp"
#include "qgeom/quadrature.hpp"

namespace qgeom {

enum class ModulationKind { linear, elliptical };

inline const char* to_string(ModulationKind k) { return k == ModulationKind::linear ? "linear" : "elliptical"; }

inline constexpr double amplitude_hard_cap = 0.3;
inline constexpr double amplitude_soft_cap = 0.15;

// theta_t = theta0 + a_theta sin(omega t)
// phi_t   = phi0 + a_phi sin(omega t)   (linear)
//         = phi0 + a_phi cos(omega t)   (elliptical)
// The sign of a_phi selects the sense of rotation of elliptical orbits.
struct ModulationSpec {
  ModulationKind kind = ModulationKind::linear;
  double a_theta = 0.0;
  double a_phi = 0.0;
  double omega = 2.0 * pi * 20e6;  // rad/s
  double theta0 = pi / 2.0;
  double phi0 = 0.0;

  void validate() const {
    if (!std::isfinite(a_theta) || !std::isfinite(a_phi) || !std::isfinite(omega) || !std::isfinite(theta0) ||
        !std::isfinite(phi0))
      throw invalid_input("modulation spec must be finite");
    if (std::abs(a_theta) > amplitude_hard_cap || std::abs(a_phi) > amplitude_hard_cap)
      throw invalid_input("modulation amplitudes are capped at 0.3 (perturbative regime)");
    if (!(omega > 0.0)) throw invalid_input("modulation frequency must be positive");
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (std::abs(a_theta) > amplitude_soft_cap || std::abs(a_phi) > amplitude_soft_cap)
      w.emplace_back("modulation amplitude above 0.15: higher-order corrections may be visible");
    return w;
  }

  double period() const { return 2.0 * pi / omega; }

  ModulationSpec with_base(const StaticParams& p) const {
    ModulationSpec s = *this;
    s.theta0 = p.theta0;
    s.phi0 = p.phi0;
    return s;
  }
  ModulationSpec with_omega(double w) const {
    ModulationSpec s = *this;
    s.omega = w;
    return s;
  }
  ModulationSpec with_amplitudes(double at, double ap) const {
    ModulationSpec s = *this;
    s.a_theta = at;
    s.a_phi = ap;
    return s;
  }
};

struct DriveSample {
  double t = 0.0;
  double envelope = 0.0;  // A sin(theta_t), rad/s
  double phase = 0.0;     // -f(t) + phi_t
  double carrier = 0.0;   // rad/s
};

inline std::pair<double, double> trajectory(const ModulationSpec& spec, double t) {
  const double wt = spec.omega * t;
  const double s = std::sin(wt);
  const double theta = spec.theta0 + spec.a_theta * s;
  const double phi = spec.phi0 + spec.a_phi * (spec.kind == ModulationKind::linear ? s : std::cos(wt));
  return {theta, phi};
}

// f(t) = A int_0^t cos(theta_tau) dtau, by adaptive quadrature to 1e-10 rad.
inline double phase_control_exact(const ModulationSpec& spec, const StaticParams& params, double t) {
  if (!(t >= 0.0)) throw invalid_input("phase_control_exact: t must be non-negative");
  if (spec.a_theta == 0.0) return params.A * std::cos(spec.theta0) * t;
  // integrate in x = omega tau; f = (A/omega) int_0^{omega t} cos(theta0 + a sin x) dx
  const double scale = params.A / spec.omega;
  const double x1 = spec.omega * t;
  const auto integrand = [&](double x) { return std::cos(spec.theta0 + spec.a_theta * std::sin(x)); };
  const int panels = std::max(16, static_cast<int>(std::ceil(x1 / (2.0 * pi))) * 8);
  const auto res = quad::adaptive_simpson(integrand, 0.0, x1, 1e-10 / scale, panels);
  return scale * res.value;
}

// Bessel-series form of f(t), truncated after the J_order term:
//   A cos(theta0) [J0 t + sum_{n>=1} J_{2n} sin(2n w t)/(n w)]
//   - 2 A sin(theta0) sum_{n>=0} J_{2n+1} (1 - cos((2n+1) w t))/((2n+1) w)
// order = 1 gives A cos(theta0) J0 t - (4 A sin(theta0)/w) J1 sin^2(w t/2).
class BesselPhaseControl {
 public:
  BesselPhaseControl(const ModulationSpec& spec, const StaticParams& params, int truncation_order = 1)
      : omega_(spec.omega), cos0_(std::cos(spec.theta0)), sin0_(std::sin(spec.theta0)), A_(params.A) {
    if (truncation_order < 1) throw invalid_input("phase_control_bessel: truncation_order must be >= 1");
    j_.resize(static_cast<std::size_t>(truncation_order) + 1);
    for (int k = 0; k <= truncation_order; ++k)
      j_[static_cast<std::size_t>(k)] = spec.a_theta == 0.0 ? (k == 0 ? 1.0 : 0.0)
                                                             : std::cyl_bessel_j(static_cast<double>(k), spec.a_theta);
  }

  double operator()(double t) const {
    const double wt = omega_ * t;
    double f = A_ * cos0_ * j_[0] * t;
    for (std::size_t k = 1; k < j_.size(); ++k) {
      const double kk = static_cast<double>(k);
      if (k % 2 == 0) {
        f += A_ * cos0_ * 2.0 * j_[k] * std::sin(kk * wt) / (kk * omega_);
      } else {
        const double half = std::sin(0.5 * kk * wt);
        f -= A_ * sin0_ * 4.0 * j_[k] * half * half / (kk * omega_);
      }
    }
    return f;
  }

 private:
  double omega_;
  double cos0_;
  double sin0_;
  double A_;
  std::vector<double> j_;
};

inline double phase_control_bessel(const ModulationSpec& spec, const StaticParams& params, double t,
                                   int truncation_order = 1) {
  return BesselPhaseControl(spec, params, truncation_order)(t);
}

// RWA regime guard for the lab-frame drive; violations are reported, not thrown.
inline std::vector<std::string> rwa_warnings(double omega0, double A) {
  std::vector<std::string> w;
  if (omega0 < 10.0 * A) {
    w.emplace_back("omega0 < 10 A: rotating-wave reduction of the lab-frame drive is not valid");
  } else if (omega0 < 50.0 * A) {
    w.emplace_back("omega0 < 50 A: counter-rotating corrections may be visible");
  }
  return w;
}

// Lab-frame drive (omega0/2) sz + A sin(theta_t) cos(omega_d t - f(t) + phi_t) sx with carrier
// omega_d = omega0 - r A, so that the rotating frame carries the r sz offset.
class LabDrive {
 public:
  LabDrive(const ModulationSpec& spec, const StaticParams& params, double omega0, int truncation_order = 1)
      : spec_(spec), params_(params), omega0_(omega0), phase_(spec, params, truncation_order) {
    if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw invalid_input("omega0 must be positive");
  }

  double carrier() const { return omega0_ - params_.r * params_.A; }
  double omega0() const { return omega0_; }

  DriveSample sample(double t) const {
    const auto [theta, phi] = trajectory(spec_, t);
    return {t, params_.A * std::sin(theta), -phase_(t) + phi, carrier()};
  }

  Hermitian2 operator()(double t) const {
    const DriveSample d = sample(t);
    return {0.0, d.envelope * std::cos(d.carrier * t + d.phase), 0.0, omega0_ / 2.0};
  }

  double fastest_period() const { return 2.0 * pi / std::max(omega0_, spec_.omega); }

  std::vector<std::string> warnings() const { return rwa_warnings(omega0_, params_.A); }

 private:
  ModulationSpec spec_;
  StaticParams params_;
  double omega0_;
  BesselPhaseControl phase_;
};

inline Hermitian2 lab_hamiltonian(const ModulationSpec& spec, const StaticParams& params, double omega0, double t,
                                  int truncation_order = 1) {
  return LabDrive(spec, params, omega0, truncation_order)(t);
}

inline Hermitian2 effective_hamiltonian(const ModulationSpec& spec, const StaticParams& params, double t) {
  const auto [theta, phi] = trajectory(spec, t);
  return hamiltonian(theta, phi, params.A, params.r);
}

// H(theta0, phi0) + a_theta dH/dtheta sin(wt) + a_phi dH/dphi (sin|cos)(wt)
inline Hermitian2 first_order_hamiltonian(const ModulationSpec& spec, const StaticParams& params, double t) {
  const double wt = spec.omega * t;
  const double s = std::sin(wt);
  const double g = spec.kind == ModulationKind::linear ? s : std::cos(wt);
  return hamiltonian(spec.theta0, spec.phi0, params.A, params.r) +
         spec.a_theta * s * dtheta_hamiltonian(spec.theta0, spec.phi0, params.A) +
         spec.a_phi * g * dphi_hamiltonian(spec.theta0, spec.phi0, params.A);
}

class EffectiveDrive {
 public:
  EffectiveDrive(const ModulationSpec& spec, const StaticParams& params) : spec_(spec), params_(params) {}

  Hermitian2 operator()(double t) const { return effective_hamiltonian(spec_, params_, t); }

  // modulation period, or the bare precession period if that is shorter
  double fastest_period() const {
    return std::min(spec_.period(), 2.0 * pi / (params_.A * (1.0 + params_.r)));
  }

 private:
  ModulationSpec spec_;
  StaticParams params_;
};

}  // namespace qgeom
