#pragma once

// Least-squares estimation of a Rabi frequency from a sampled survival trace,
// model p0(t) = offset - contrast * sin^2(omega_rabi t / 2).

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <vector>

#include "qgeom/errors.hpp"
#include "qgeom/qcore.hpp"

namespace qgeom {

struct RabiTrace {
  std::vector<double> times;  // s, strictly increasing
  std::vector<double> p0;     // probabilities in [0, 1]
};

struct RabiFit {
  double omega_rabi = 0.0;  // rad/s
  double contrast = 0.0;
  double offset = 1.0;
  double rms_residual = 0.0;
  double sigma_omega = 0.0;
  double sigma_contrast = 0.0;
  double sigma_offset = 0.0;
  double periods = 0.0;  // oscillation periods spanned by the trace
  int iterations = 0;
};

namespace detail {

// Solves the symmetric 3x3 system M x = b by Gaussian elimination with partial pivoting.
inline bool solve3(std::array<std::array<double, 3>, 3> M, std::array<double, 3> b, std::array<double, 3>& x) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(M[r][c]) > std::abs(M[piv][c])) piv = r;
    if (M[piv][c] == 0.0 || !std::isfinite(M[piv][c])) return false;
    std::swap(M[piv], M[c]);
    std::swap(b[piv], b[c]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = M[r][c] / M[c][c];
      for (int k = c; k < 3; ++k) M[r][k] -= f * M[c][k];
      b[r] -= f * b[c];
    }
  }
  for (int c = 2; c >= 0; --c) {
    double s = b[c];
    for (int k = c + 1; k < 3; ++k) s -= M[c][k] * x[k];
    x[c] = s / M[c][c];
  }
  return true;
}

inline bool invert3(const std::array<std::array<double, 3>, 3>& M, std::array<std::array<double, 3>, 3>& inv) {
  for (int c = 0; c < 3; ++c) {
    std::array<double, 3> e{0.0, 0.0, 0.0};
    e[c] = 1.0;
    std::array<double, 3> col{};
    if (!solve3(M, e, col)) return false;
    for (int r = 0; r < 3; ++r) inv[r][c] = col[r];
  }
  return true;
}

struct LinearFit {
  double offset;
  double contrast;
  double rss;
};

// For fixed scaled frequency w, the model is linear in (offset, contrast).
inline LinearFit fit_linear(const std::vector<double>& u, const std::vector<double>& y, double w) {
  double n = 0, ss = 0, s = 0, sy = 0, ssy = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double h = std::sin(0.5 * w * u[i]);
    const double b = -h * h;
    n += 1.0;
    s += b;
    ss += b * b;
    sy += y[i];
    ssy += b * y[i];
  }
  const double det = n * ss - s * s;
  LinearFit f{sy / n, 0.0, 0.0};
  if (std::abs(det) > 1e-300) {
    f.offset = (ss * sy - s * ssy) / det;
    f.contrast = (n * ssy - s * sy) / det;
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double h = std::sin(0.5 * w * u[i]);
    const double r = y[i] - (f.offset - f.contrast * h * h);
    f.rss += r * r;
  }
  return f;
}

}  // namespace detail

inline RabiFit fit_rabi(const RabiTrace& trace) {
  const std::size_t N = trace.times.size();
  if (N != trace.p0.size()) throw invalid_input("fit_rabi: times and p0 differ in length");
  if (N < 16) throw insufficient_data("fit_rabi: need at least 16 samples, got " + std::to_string(N));
  for (std::size_t i = 0; i < N; ++i) {
    if (!std::isfinite(trace.times[i]) || !std::isfinite(trace.p0[i])) throw invalid_input("fit_rabi: non-finite sample");
    if (i > 0 && !(trace.times[i] > trace.times[i - 1])) throw invalid_input("fit_rabi: times must increase");
  }
  const double t_scale = trace.times.back();
  if (!(t_scale > 0.0)) throw invalid_input("fit_rabi: trace must extend to positive times");
  std::vector<double> u(N);
  for (std::size_t i = 0; i < N; ++i) u[i] = trace.times[i] / t_scale;
  const double span = u.back() - u.front();
  const std::vector<double>& y = trace.p0;

  // Periodogram of the mean-removed trace on a 4x oversampled grid (cycles per t_scale).
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(N);
  constexpr int pad = 4;
  const double nu_max = 0.5 * static_cast<double>(N - 1) / span;
  const int K = std::max(2, static_cast<int>(std::ceil(nu_max * span * pad)));
  double best_power = -1.0;
  double nu_peak = 0.0;
  for (int k = 1; k <= K; ++k) {
    const double nu = static_cast<double>(k) / (pad * span);
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < N; ++i) acc += (y[i] - mean) * std::polar(1.0, -2.0 * pi * nu * u[i]);
    const double p = std::norm(acc);
    if (p > best_power) {
      best_power = p;
      nu_peak = nu;
    }
  }
  if (nu_peak * span < 0.5 || best_power <= 0.0) {
    throw insufficient_data("fit_rabi: spectral peak at DC; the trace spans too little of an oscillation");
  }

  // Coarse scan around the peak with the linear parameters eliminated.
  double w_best = 2.0 * pi * nu_peak;
  {
    const double lo = std::max(0.25 * w_best, 2.0 * pi * (nu_peak - 0.5 / span));
    const double hi = 2.0 * pi * (nu_peak + 0.5 / span);
    double rss_best = std::numeric_limits<double>::infinity();
    constexpr int M = 81;
    for (int k = 0; k < M; ++k) {
      const double w = lo + (hi - lo) * k / (M - 1);
      const double rss = detail::fit_linear(u, y, w).rss;
      if (rss < rss_best) {
        rss_best = rss;
        w_best = w;
      }
    }
  }

  // Levenberg-Marquardt on (offset, contrast, w).
  auto lin = detail::fit_linear(u, y, w_best);
  std::array<double, 3> p{lin.offset, lin.contrast, w_best};
  auto rss_of = [&](const std::array<double, 3>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double h = std::sin(0.5 * q[2] * u[i]);
      const double r = y[i] - (q[0] - q[1] * h * h);
      s += r * r;
    }
    return s;
  };
  double rss = rss_of(p);
  double lambda = 1e-6;
  int it = 0;
  bool converged = false;
  std::array<std::array<double, 3>, 3> JtJ{};
  for (; it < 200; ++it) {
    std::array<double, 3> Jtr{0.0, 0.0, 0.0};
    JtJ = {};
    for (std::size_t i = 0; i < N; ++i) {
      const double h = std::sin(0.5 * p[2] * u[i]);
      const double r = y[i] - (p[0] - p[1] * h * h);
      const std::array<double, 3> J{1.0, -h * h, -0.5 * p[1] * std::sin(p[2] * u[i]) * u[i]};
      for (int a = 0; a < 3; ++a) {
        Jtr[a] += J[a] * r;
        for (int b = 0; b < 3; ++b) JtJ[a][b] += J[a] * J[b];
      }
    }
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      auto M = JtJ;
      for (int a = 0; a < 3; ++a) M[a][a] *= (1.0 + lambda);
      std::array<double, 3> dx{};
      if (!detail::solve3(M, Jtr, dx)) {
        lambda *= 10.0;
        continue;
      }
      const std::array<double, 3> trial{p[0] + dx[0], p[1] + dx[1], p[2] + dx[2]};
      const double rss_trial = rss_of(trial);
      if (rss_trial <= rss) {
        const double rel_step = std::abs(dx[2]) / std::max(std::abs(trial[2]), 1e-300);
        const double drop = rss - rss_trial;
        p = trial;
        rss = rss_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (rel_step < 1e-12 || drop <= 1e-15 * std::max(rss, 1e-300) || rss < 1e-28) converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) {
      converged = true;  // no descent direction left at machine precision
    }
    if (converged) break;
  }
  if (!converged) {
    std::ostringstream os;
    os << "fit_rabi: no convergence in 200 iterations (omega~" << p[2] / t_scale << " rad/s)";
    throw fit_failed(os.str());
  }
  if (!(p[2] > 0.0) || !std::isfinite(p[2])) throw fit_failed("fit_rabi: non-positive fitted frequency");
  if (p[1] < 0.0) throw fit_failed("fit_rabi: negative contrast; trace does not start in the tracked state");

  RabiFit out;
  out.omega_rabi = p[2] / t_scale;
  out.contrast = p[1];
  out.offset = p[0];
  out.rms_residual = std::sqrt(rss / static_cast<double>(N));
  out.periods = p[2] * span / (2.0 * pi);
  out.iterations = it + 1;
  std::array<std::array<double, 3>, 3> cov{};
  if (N > 3 && detail::invert3(JtJ, cov)) {
    const double s2 = rss / static_cast<double>(N - 3);
    out.sigma_offset = std::sqrt(std::max(0.0, s2 * cov[0][0]));
    out.sigma_contrast = std::sqrt(std::max(0.0, s2 * cov[1][1]));
    out.sigma_omega = std::sqrt(std::max(0.0, s2 * cov[2][2])) / t_scale;
  }
  if (out.periods < 1.5) {
    std::ostringstream os;
    os << "fit_rabi: trace spans " << out.periods << " oscillation periods; at least 1.5 are required";
    throw insufficient_data(os.str());
  }
  return out;
}

}  // namespace qgeom
