#pragma once

// Two-level linear algebra: states, Hermitian generators, SU(2) propagators
// and gauge-fixed eigensystems.
//
// Basis ordering is {|-1>, |0>}; index 0 is the sigma_z = +1 state.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "qgeom/errors.hpp"

namespace qgeom {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};

struct SpinState {
  cplx c_up{1.0, 0.0};    // amplitude on |-1>
  cplx c_down{0.0, 0.0};  // amplitude on |0>

  static constexpr SpinState up() { return {cplx{1.0, 0.0}, cplx{0.0, 0.0}}; }
  static constexpr SpinState down() { return {cplx{0.0, 0.0}, cplx{1.0, 0.0}}; }

  // cos(theta/2)|-1> + sin(theta/2) e^{i phi}|0>
  static SpinState bloch(double theta, double phi) {
    return {cplx{std::cos(theta / 2.0), 0.0}, std::sin(theta / 2.0) * std::polar(1.0, phi)};
  }

  double norm() const { return std::sqrt(std::norm(c_up) + std::norm(c_down)); }

  SpinState normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw invalid_input("cannot normalize a zero or non-finite state");
    return {c_up / n, c_down / n};
  }

  const cplx& operator[](int i) const { return i == 0 ? c_up : c_down; }
  cplx& operator[](int i) { return i == 0 ? c_up : c_down; }
};

// <a|b>
inline cplx inner(const SpinState& a, const SpinState& b) {
  return std::conj(a.c_up) * b.c_up + std::conj(a.c_down) * b.c_down;
}

inline double fidelity(const SpinState& a, const SpinState& b) {
  const double f = std::norm(inner(a, b));
  return f > 1.0 ? 1.0 : f;
}

// General complex 2x2 matrix, row-major.
struct Mat2 {
  std::array<cplx, 4> m{};

  static constexpr Mat2 identity() { return {{cplx{1.0}, cplx{0.0}, cplx{0.0}, cplx{1.0}}}; }
  static constexpr Mat2 zero() { return {}; }

  const cplx& operator()(int i, int j) const { return m[static_cast<std::size_t>(2 * i + j)]; }
  cplx& operator()(int i, int j) { return m[static_cast<std::size_t>(2 * i + j)]; }

  Mat2 adjoint() const { return {{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}}; }

  Mat2& operator+=(const Mat2& o) {
    for (std::size_t k = 0; k < 4; ++k) m[k] += o.m[k];
    return *this;
  }
  Mat2& operator-=(const Mat2& o) {
    for (std::size_t k = 0; k < 4; ++k) m[k] -= o.m[k];
    return *this;
  }
  Mat2& operator*=(cplx s) {
    for (auto& x : m) x *= s;
    return *this;
  }
};

inline Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
inline Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
inline Mat2 operator*(Mat2 a, cplx s) { return a *= s; }
inline Mat2 operator*(cplx s, Mat2 a) { return a *= s; }

inline Mat2 operator*(const Mat2& a, const Mat2& b) {
  Mat2 c;
  c(0, 0) = a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0);
  c(0, 1) = a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1);
  c(1, 0) = a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0);
  c(1, 1) = a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1);
  return c;
}

inline SpinState operator*(const Mat2& a, const SpinState& v) {
  return {a(0, 0) * v.c_up + a(0, 1) * v.c_down, a(1, 0) * v.c_up + a(1, 1) * v.c_down};
}

// <a|M|b>
inline cplx matrix_element(const SpinState& a, const Mat2& M, const SpinState& b) { return inner(a, M * b); }

inline double max_abs_diff(const Mat2& a, const Mat2& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < 4; ++k) d = std::max(d, std::abs(a.m[k] - b.m[k]));
  return d;
}

// Hermitian operator h0*I + hx*sx + hy*sy + hz*sz. Hermiticity holds by construction.
struct Hermitian2 {
  double h0 = 0.0;
  double hx = 0.0;
  double hy = 0.0;
  double hz = 0.0;

  static Hermitian2 from_entries(double a00, cplx a01, double a11) {
    return {(a00 + a11) / 2.0, a01.real(), -a01.imag(), (a00 - a11) / 2.0};
  }

  cplx entry(int i, int j) const {
    if (i == 0 && j == 0) return {h0 + hz, 0.0};
    if (i == 1 && j == 1) return {h0 - hz, 0.0};
    if (i == 0) return {hx, -hy};
    return {hx, hy};
  }

  Mat2 matrix() const { return {{entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1)}}; }

  // half the spectral gap
  double field_norm() const { return std::sqrt(hx * hx + hy * hy + hz * hz); }

  bool finite() const {
    return std::isfinite(h0) && std::isfinite(hx) && std::isfinite(hy) && std::isfinite(hz);
  }

  Hermitian2& operator+=(const Hermitian2& o) {
    h0 += o.h0;
    hx += o.hx;
    hy += o.hy;
    hz += o.hz;
    return *this;
  }
  Hermitian2& operator*=(double s) {
    h0 *= s;
    hx *= s;
    hy *= s;
    hz *= s;
    return *this;
  }
};

inline Hermitian2 operator+(Hermitian2 a, const Hermitian2& b) { return a += b; }
inline Hermitian2 operator-(Hermitian2 a, const Hermitian2& b) {
  return {a.h0 - b.h0, a.hx - b.hx, a.hy - b.hy, a.hz - b.hz};
}
inline Hermitian2 operator*(double s, Hermitian2 a) { return a *= s; }
inline Hermitian2 operator*(Hermitian2 a, double s) { return a *= s; }

inline SpinState operator*(const Hermitian2& h, const SpinState& v) { return h.matrix() * v; }

inline double max_abs_diff(const Hermitian2& a, const Hermitian2& b) { return max_abs_diff(a.matrix(), b.matrix()); }

namespace pauli {
inline constexpr Hermitian2 id{1.0, 0.0, 0.0, 0.0};
inline constexpr Hermitian2 x{0.0, 1.0, 0.0, 0.0};
inline constexpr Hermitian2 y{0.0, 0.0, 1.0, 0.0};
inline constexpr Hermitian2 z{0.0, 0.0, 0.0, 1.0};
}  // namespace pauli

struct Unitary2 {
  Mat2 m = Mat2::identity();

  static Unitary2 identity() { return {}; }

  Unitary2 adjoint() const { return {m.adjoint()}; }

  SpinState apply(const SpinState& v) const { return m * v; }

  // max-norm distance of U^dagger U from the identity
  double unitarity_defect() const { return max_abs_diff(m.adjoint() * m, Mat2::identity()); }
};

inline Unitary2 operator*(const Unitary2& a, const Unitary2& b) { return {a.m * b.m}; }
inline SpinState operator*(const Unitary2& u, const SpinState& v) { return u.apply(v); }

// exp(-i H dt), closed form: global phase from h0 times an SU(2) rotation.
inline Unitary2 exponentiate(const Hermitian2& H, double dt) {
  if (!H.finite() || !std::isfinite(dt)) throw invalid_input("exponentiate: non-finite Hamiltonian or time step");
  const double n = H.field_norm();
  const double angle = n * dt;
  const double c = std::cos(angle);
  const double s = n > 0.0 ? std::sin(angle) / n : dt;
  const cplx ph = std::polar(1.0, -H.h0 * dt);
  Unitary2 u;
  u.m(0, 0) = ph * cplx{c, -s * H.hz};
  u.m(0, 1) = ph * cplx{-s * H.hy, -s * H.hx};
  u.m(1, 0) = ph * cplx{s * H.hy, -s * H.hx};
  u.m(1, 1) = ph * cplx{c, s * H.hz};
  return u;
}

// exp(-i (angle/2) n.sigma) for a unit axis n.
inline Unitary2 rotation(double angle, double nx, double ny, double nz) {
  return exponentiate(Hermitian2{0.0, nx, ny, nz}, angle / 2.0);
}

struct EigenSystem {
  double e_minus = 0.0;
  double e_plus = 0.0;
  SpinState psi_minus = SpinState::down();
  SpinState psi_plus = SpinState::up();
  bool degenerate = false;

  double gap() const { return e_plus - e_minus; }
};

// Ordered eigenpairs. Gauge: the |-1> component of each vector is real and
// non-negative; where it vanishes the |0> component is real and positive.
// Spectra with gap < 1e-12*||H|| are flagged degenerate (vectors then arbitrary).
inline EigenSystem eigensystem(const Hermitian2& H) {
  if (!H.finite()) throw invalid_input("eigensystem: non-finite Hamiltonian");
  EigenSystem es;
  const double n = H.field_norm();
  const double scale = std::abs(H.h0) + n;
  es.e_minus = H.h0 - n;
  es.e_plus = H.h0 + n;
  if (2.0 * n <= 1e-12 * scale || scale == 0.0) {
    es.e_minus = es.e_plus = H.h0;
    es.degenerate = true;
    return es;
  }
  const double rho = std::hypot(H.hx, H.hy);
  const cplx phase = rho > 0.0 ? cplx{H.hx / rho, H.hy / rho} : cplx{1.0, 0.0};
  const double cz = H.hz / n;
  double c = 0.0;  // cos(theta/2)
  double s = 0.0;  // sin(theta/2)
  if (H.hz >= 0.0) {
    c = std::sqrt((1.0 + cz) / 2.0);
    s = rho / (2.0 * c * n);
  } else {
    s = std::sqrt((1.0 - cz) / 2.0);
    c = rho / (2.0 * s * n);
  }
  es.psi_plus = c == 0.0 ? SpinState::down() : SpinState{cplx{c, 0.0}, s * phase};
  es.psi_minus = s == 0.0 ? SpinState::down() : SpinState{cplx{s, 0.0}, -c * phase};
  return es;
}

// |psi><psi|
inline Mat2 projector(const SpinState& v) {
  return {{v.c_up * std::conj(v.c_up), v.c_up * std::conj(v.c_down), v.c_down * std::conj(v.c_up),
           v.c_down * std::conj(v.c_down)}};
}

}  // namespace qgeom
