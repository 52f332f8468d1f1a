#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>

#include "qgeom/errors.hpp"

namespace qgeom::quad {

struct AdaptiveResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

template <class F>
double simpson_recurse(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                       int depth, int max_depth, AdaptiveResult& acc) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  acc.evaluations += 2;
  const double h = b - a;
  const double left = h / 12.0 * (fa + 4.0 * flm + fm);
  const double right = h / 12.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) {
    acc.error_estimate += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  if (depth >= max_depth) {
    std::ostringstream os;
    os << "adaptive quadrature did not converge on [" << a << ", " << b << "] at depth " << depth
       << " (local error " << std::abs(delta) / 15.0 << ", tolerance " << tol << ", " << acc.evaluations
       << " evaluations)";
    throw numerical_error(os.str());
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1, max_depth, acc) +
         simpson_recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1, max_depth, acc);
}

}  // namespace detail

// Adaptive Simpson with Richardson extrapolation; abs_tol is the target absolute error.
// The interval is pre-split into `initial_panels` pieces so oscillatory integrands are not
// accepted on a lucky coarse estimate.
template <class F>
AdaptiveResult adaptive_simpson(const F& f, double a, double b, double abs_tol, int initial_panels = 16,
                                int max_depth = 40) {
  AdaptiveResult acc;
  if (a == b) return acc;
  const double width = (b - a) / initial_panels;
  for (int k = 0; k < initial_panels; ++k) {
    const double lo = a + k * width;
    const double hi = k + 1 == initial_panels ? b : a + (k + 1) * width;
    const double flo = f(lo);
    const double fmid = f(0.5 * (lo + hi));
    const double fhi = f(hi);
    acc.evaluations += 3;
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    acc.value += detail::simpson_recurse(f, lo, hi, flo, fmid, fhi, whole, abs_tol / initial_panels, 0, max_depth, acc);
  }
  return acc;
}

struct UniformGrid {
  double start = 0.0;
  double step = 0.0;
  std::size_t count = 0;
};

// Checks that `x` is a uniform grid from lo to hi (within tol) with an odd number of points.
inline UniformGrid check_simpson_grid(std::span<const double> x, double lo, double hi, double tol = 1e-9) {
  if (x.size() < 3) {
    throw coverage_error("quadrature grid has " + std::to_string(x.size()) + " point(s); it must span the interval");
  }
  const double span = hi - lo;
  if (std::abs(x.front() - lo) > tol * std::max(1.0, std::abs(span)) ||
      std::abs(x.back() - hi) > tol * std::max(1.0, std::abs(span))) {
    std::ostringstream os;
    os << "quadrature grid [" << x.front() << ", " << x.back() << "] does not cover [" << lo << ", " << hi << "]";
    throw coverage_error(os.str());
  }
  if (x.size() % 2 == 0) {
    throw invalid_input("composite Simpson needs an odd number of grid points, got " + std::to_string(x.size()));
  }
  const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs((x[i] - x[i - 1]) - h) > 1e-7 * std::abs(h)) throw invalid_input("quadrature grid is not uniform");
  }
  return {x.front(), h, x.size()};
}

// Composite Simpson over samples y on a uniform grid with spacing h (odd count).
inline double simpson(std::span<const double> y, double h) {
  const std::size_t n = y.size();
  double s = y[0] + y[n - 1];
  for (std::size_t i = 1; i + 1 < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
  return s * h / 3.0;
}

}  // namespace qgeom::quad
