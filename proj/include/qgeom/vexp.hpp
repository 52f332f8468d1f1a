#pragma once

// Virtual experiment: preparation, verification, resonance sweep and refinement,
// Rabi-trace acquisition and readout.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qgeom/control.hpp"
#include "qgeom/dynamics.hpp"
#include "qgeom/errors.hpp"
#include "qgeom/floquet.hpp"
#include "qgeom/model.hpp"
#include "qgeom/parallel.hpp"
#include "qgeom/qcore.hpp"
#include "qgeom/rabi_fit.hpp"

namespace qgeom {

enum class Frame { effective, lab };

inline const char* to_string(Frame f) { return f == Frame::effective ? "effective" : "lab"; }

inline constexpr double default_omega0 = 2.0 * pi * 1.4455e9;  // rad/s

struct ExperimentConfig {
  StaticParams params;
  ModulationSpec spec;  // theta0/phi0 are taken from params
  Frame frame = Frame::effective;
  double omega0 = default_omega0;
  double T_probe = 400e-9;
  std::optional<int> shots;
  std::uint64_t seed = 0;
  std::optional<IntegratorConfig> integrator;
  unsigned threads = 1;
  int phase_order = 1;             // Bessel truncation of the lab-frame phase control
  std::optional<double> omega_prep;  // simulate the preparation pulse (lab frame) at this Rabi rate

  void validate() const {
    params.validate();
    modulation().validate();
    if (!(T_probe > 0.0) || !std::isfinite(T_probe)) throw invalid_input("T_probe must be positive");
    if (shots && *shots < 100) throw invalid_input("shots must be >= 100 when present");
    if (frame == Frame::lab && (!(omega0 > 0.0) || !std::isfinite(omega0))) throw invalid_input("omega0 must be positive");
    if (omega_prep && (!(*omega_prep > 0.0) || !std::isfinite(*omega_prep)))
      throw invalid_input("omega_prep must be positive");
    if (phase_order < 1) throw invalid_input("phase_order must be >= 1");
    if (integrator) integrator->validate();
  }

  ModulationSpec modulation() const { return spec.with_base(params); }

  IntegratorConfig integrator_or_default() const {
    if (integrator) return *integrator;
    return frame == Frame::lab ? lab_integrator() : effective_integrator();
  }

  std::vector<std::string> warnings() const {
    auto w = modulation().warnings();
    if (frame == Frame::lab)
      for (auto& s : rwa_warnings(omega0, params.A)) w.push_back(std::move(s));
    return w;
  }
};

// Rotation by theta' about n(phi0) = (-sin phi0, cos phi0, 0); maps |-1> onto the tracked eigenstate.
inline Unitary2 preparation_rotation(const StaticParams& params) {
  const double tp = eigenstate_angle(params.theta0, params.r);
  return rotation(tp, -std::sin(params.phi0), std::cos(params.phi0), 0.0);
}

inline SpinState prepare_state(const StaticParams& params) {
  params.validate();
  (void)detail::checked_gap_sq(params.theta0, params.r, "prepare_state");
  return preparation_rotation(params).apply(SpinState::up());
}

// Lab-frame rotation pulse (omega0/2) sz - omega_prep sin(omega0 t + phi0) sx of duration theta'/omega_prep,
// starting from |-1>; returns the rotating-frame state at the end of the pulse.
inline SpinState prepare_state_pulsed(const StaticParams& params, double omega0, double omega_prep,
                                      const IntegratorConfig& cfg = lab_integrator()) {
  params.validate();
  (void)detail::checked_gap_sq(params.theta0, params.r, "prepare_state");
  if (!(omega0 > 0.0) || !(omega_prep > 0.0)) throw invalid_input("prepare_state_pulsed: frequencies must be positive");
  const double tp = eigenstate_angle(params.theta0, params.r);
  const double duration = tp / omega_prep;
  const double phi0 = params.phi0;
  auto src = make_source(
      [=](double t) { return Hermitian2{0.0, -omega_prep * std::sin(omega0 * t + phi0), 0.0, omega0 / 2.0}; },
      2.0 * pi / omega0);
  const SpinState lab = propagate(src, SpinState::up(), 0.0, duration, cfg);
  return exponentiate(Hermitian2{0.0, 0.0, 0.0, omega0 * duration / 2.0}, -1.0) * lab;
}

// Probability of finding the tracked eigenstate: |<-1| R^dagger psi>|^2.
inline double readout(const SpinState& psi, const StaticParams& params) {
  const SpinState back = preparation_rotation(params).adjoint().apply(psi);
  return std::clamp(std::norm(back.c_up) / psi.norm() / psi.norm(), 0.0, 1.0);
}

struct FidelityTrace {
  std::vector<double> times;
  std::vector<double> p_g;

  double min() const { return p_g.empty() ? 1.0 : *std::min_element(p_g.begin(), p_g.end()); }
  double max() const { return p_g.empty() ? 1.0 : *std::max_element(p_g.begin(), p_g.end()); }
  double contrast() const { return max() - min(); }
};

// Survival |<psi(t)|psi(0)>|^2 under the static H(theta0, phi0).
inline FidelityTrace verify_preparation(const SpinState& psi0, const StaticParams& params, double duration,
                                        int n_samples) {
  if (!(duration >= 0.0)) throw invalid_input("verify_preparation: duration must be non-negative");
  if (n_samples < 1) throw invalid_input("verify_preparation: n_samples must be >= 1");
  const SpinState psi = psi0.normalized();
  const Hermitian2 H = hamiltonian(params);
  FidelityTrace tr;
  const int n = duration == 0.0 ? 1 : std::max(2, n_samples);
  for (int k = 0; k < n; ++k) {
    const double t = n == 1 ? 0.0 : duration * k / (n - 1);
    tr.times.push_back(t);
    tr.p_g.push_back(fidelity(psi, exponentiate(H, t).apply(psi)));
  }
  return tr;
}

struct ResonanceScan {
  std::vector<double> omega_grid;
  std::vector<double> p0;

  // Grid minimum refined by a three-point parabola.
  double dip_center() const {
    if (p0.empty()) throw invalid_input("dip_center: empty scan");
    const auto it = std::min_element(p0.begin(), p0.end());
    const std::size_t i = static_cast<std::size_t>(it - p0.begin());
    if (i == 0 || i + 1 == p0.size()) return omega_grid[i];
    const double x0 = omega_grid[i - 1], x1 = omega_grid[i], x2 = omega_grid[i + 1];
    const double y0 = p0[i - 1], y1 = p0[i], y2 = p0[i + 1];
    const double d = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d;
    if (!(a > 0.0)) return x1;
    return std::clamp(-b / (2.0 * a), x0, x2);
  }
};

namespace detail {

inline SpinState initial_state(const ExperimentConfig& cfg) {
  if (cfg.frame == Frame::lab && cfg.omega_prep) return prepare_state_pulsed(cfg.params, cfg.omega0, *cfg.omega_prep);
  return prepare_state(cfg.params);
}

inline double sample_shots(double p, int shots, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::binomial_distribution<int> dist(shots, std::clamp(p, 0.0, 1.0));
  return static_cast<double>(dist(rng)) / shots;
}

// Tracked-state survival at each of `times` (increasing, >= 0) for modulation at spec.omega.
inline std::vector<double> survival_series(const ExperimentConfig& cfg, const ModulationSpec& spec,
                                           std::span<const double> times) {
  std::vector<double> out;
  out.reserve(times.size());
  if (times.empty()) return out;
  if (!(times.front() >= 0.0)) throw invalid_input("times must be non-negative");
  const IntegratorConfig integ = cfg.integrator_or_default();
  SpinState psi = initial_state(cfg);
  if (cfg.frame == Frame::effective) {
    const EffectiveDrive drive(spec, cfg.params);
    double t = 0.0;
    for (double ti : times) {
      if (ti < t) throw invalid_input("times must be increasing");
      psi = propagate(drive, psi, t, ti, integ);
      t = ti;
      out.push_back(readout(psi, cfg.params));
    }
  } else {
    const LabDrive drive(spec, cfg.params, cfg.omega0, cfg.phase_order);
    double t = 0.0;
    for (double ti : times) {
      if (ti < t) throw invalid_input("times must be increasing");
      psi = propagate(drive, psi, t, ti, integ);
      t = ti;
      out.push_back(readout(frame_transform(psi, ti, cfg.params, spec, cfg.omega0), cfg.params));
    }
  }
  return out;
}

}  // namespace detail

inline ResonanceScan resonance_sweep(const ExperimentConfig& cfg, std::span<const double> omega_grid) {
  cfg.validate();
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    if (!(omega_grid[i] > omega_grid[i - 1])) throw invalid_input("resonance_sweep: omega grid must be sorted");
  const ModulationSpec base = cfg.modulation();
  ResonanceScan scan;
  scan.omega_grid.assign(omega_grid.begin(), omega_grid.end());
  scan.p0 = parallel_map(omega_grid.size(), cfg.threads, [&](std::size_t i) {
    const double w = omega_grid[i];
    double p;
    try {
      const ModulationSpec s = base.with_omega(w);
      s.validate();
      const double T = cfg.T_probe;
      p = detail::survival_series(cfg, s, std::span<const double>(&T, 1)).front();
    } catch (const error& e) {
      std::ostringstream os;
      os << "resonance_sweep: failure at omega=" << w << " rad/s: " << e.what();
      throw numerical_error(os.str());
    }
    return cfg.shots ? detail::sample_shots(p, *cfg.shots, mix_seed(cfg.seed, i)) : p;
  });
  return scan;
}

inline RabiTrace rabi_experiment(const ExperimentConfig& cfg, double omega_res, std::span<const double> t_grid) {
  cfg.validate();
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw invalid_input("rabi_experiment: t_grid must be increasing");
  const ModulationSpec s = cfg.modulation().with_omega(omega_res);
  s.validate();
  RabiTrace tr;
  tr.times.assign(t_grid.begin(), t_grid.end());
  tr.p0 = detail::survival_series(cfg, s, t_grid);
  if (cfg.shots)
    for (std::size_t i = 0; i < tr.p0.size(); ++i) tr.p0[i] = detail::sample_shots(tr.p0[i], *cfg.shots, mix_seed(cfg.seed, i));
  return tr;
}

// Sample times at integer multiples of the modulation period (suppresses micromotion).
inline std::vector<double> stroboscopic_grid(double omega, int periods, int max_samples = 241) {
  if (periods < 1 || max_samples < 2) throw invalid_input("stroboscopic_grid: bad window");
  const int stride = std::max(1, (periods + max_samples - 2) / (max_samples - 1));
  const int n = periods / stride;
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) t[static_cast<std::size_t>(k)] = 2.0 * pi * k * stride / omega;
  return t;
}

struct RefineOptions {
  double bracket = 0.10;  // relative half-width
  double rel_tol = 1e-4;
  int coarse_points = 9;
  int base_window_periods = 60;
  int max_doublings = 4;
  int max_samples = 241;
};

struct RefineResult {
  double omega = 0.0;
  double sigma_omega = 0.0;  // standard error of omega from the lineshape fit
  double contrast = 0.0;
  int window_periods = 0;
  int evaluations = 0;
};

namespace detail {

struct ContrastSample {
  double omega;
  double contrast;
  double sigma;  // standard error of the fitted contrast
};

struct LineshapeFit {
  double center;
  double sigma_center;
  double peak;
  double width;
};

// Weighted least squares of c(w) = peak / (1 + ((w - center) / width)^2), the resonant
// two-level contrast under detuning. The centre error comes from the per-point contrast
// errors alone.
inline std::optional<LineshapeFit> fit_lineshape(const std::vector<ContrastSample>& pts, double center0, double peak0,
                                                 double width0) {
  const std::size_t N = pts.size();
  if (N < 5 || !(width0 > 0.0)) return std::nullopt;
  const double scale = width0;
  std::vector<double> wt(N);
  for (std::size_t i = 0; i < N; ++i) wt[i] = 1.0 / std::pow(std::max(pts[i].sigma, 1e-9), 2);
  // parameters: peak, center offset (units of width0), log width ratio
  std::array<double, 3> q{peak0, 0.0, 0.0};
  auto eval = [&](const std::array<double, 3>& x, std::size_t i, std::array<double, 3>* J) {
    const double gam = std::exp(x[2]);
    const double u = ((pts[i].omega - center0) / scale - x[1]) / gam;
    const double den = 1.0 + u * u;
    const double m = x[0] / den;
    if (J) *J = {1.0 / den, 2.0 * x[0] * u / (den * den * gam), 2.0 * x[0] * u * u / (den * den)};
    return m;
  };
  auto rss_of = [&](const std::array<double, 3>& x) {
    double r = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double d = pts[i].contrast - eval(x, i, nullptr);
      r += wt[i] * d * d;
    }
    return r;
  };
  double rss = rss_of(q);
  double lambda = 1e-3;
  bool converged = false;
  std::array<std::array<double, 3>, 3> JtJ{};
  for (int it = 0; it < 100 && !converged; ++it) {
    std::array<double, 3> Jtr{0.0, 0.0, 0.0};
    JtJ = {};
    for (std::size_t i = 0; i < N; ++i) {
      std::array<double, 3> J{};
      const double r = pts[i].contrast - eval(q, i, &J);
      for (int a = 0; a < 3; ++a) {
        Jtr[a] += wt[i] * J[a] * r;
        for (int b = 0; b < 3; ++b) JtJ[a][b] += wt[i] * J[a] * J[b];
      }
    }
    bool accepted = false;
    for (int tries = 0; tries < 20 && !accepted; ++tries) {
      auto M = JtJ;
      for (int a = 0; a < 3; ++a) M[a][a] *= 1.0 + lambda;
      std::array<double, 3> dx{};
      if (!solve3(M, Jtr, dx)) {
        lambda *= 10.0;
        continue;
      }
      const std::array<double, 3> trial{q[0] + dx[0], q[1] + dx[1], q[2] + dx[2]};
      const double rt = rss_of(trial);
      if (rt <= rss) {
        converged = rss - rt <= 1e-14 * std::max(rss, 1e-300);
        q = trial;
        rss = rt;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;
  }
  std::array<std::array<double, 3>, 3> cov{};
  if (!invert3(JtJ, cov) || !std::isfinite(q[1])) return std::nullopt;
  return LineshapeFit{center0 + scale * q[1], scale * std::sqrt(std::max(0.0, cov[1][1])), q[0],
                      scale * std::exp(q[2])};
}

}  // namespace detail

// Maximizes the fitted contrast of stroboscopic Rabi traces over the modulation frequency.
inline RefineResult refine_resonance(const ExperimentConfig& cfg, double omega_guess, const RefineOptions& opt = {}) {
  cfg.validate();
  if (!(omega_guess > 0.0)) throw invalid_input("refine_resonance: guess must be positive");
  if (opt.coarse_points < 5) throw invalid_input("refine_resonance: need >= 5 coarse points");
  ExperimentConfig c = cfg;
  c.shots.reset();
  c.threads = 1;
  const ModulationSpec base = c.modulation();
  RefineResult res;

  struct Probe {
    double contrast;
    bool ok;
  };
  std::vector<std::pair<int, detail::ContrastSample>> samples;
  auto probe = [&](double w, int periods) -> Probe {
    const auto times = stroboscopic_grid(w, periods, opt.max_samples);
    RabiTrace tr{times, detail::survival_series(c, base.with_omega(w), times)};
    if (cfg.shots)
      for (std::size_t i = 0; i < tr.p0.size(); ++i)
        tr.p0[i] = detail::sample_shots(tr.p0[i], *cfg.shots, mix_seed(cfg.seed, (res.evaluations << 16) + i));
    ++res.evaluations;
    try {
      const RabiFit f = fit_rabi(tr);
      if (f.periods >= 2.0) samples.push_back({periods, {w, f.contrast, f.sigma_contrast}});
      return {f.contrast, f.periods >= 2.0};
    } catch (const error&) {
      return {0.0, false};
    }
  };

  const double lo = omega_guess * (1.0 - opt.bracket);
  const double hi = omega_guess * (1.0 + opt.bracket);
  const int m = opt.coarse_points;
  std::vector<double> xs(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) xs[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (m - 1);

  int periods = opt.base_window_periods;
  std::vector<double> cs;
  for (int d = 0;; ++d) {
    cs.clear();
    bool all_ok = true;
    for (double x : xs) {
      const Probe p = probe(x, periods);
      all_ok = all_ok && p.ok;
      cs.push_back(p.contrast);
    }
    if (all_ok || d >= opt.max_doublings) break;
    periods *= 2;
  }
  res.window_periods = periods;

  const std::size_t j = static_cast<std::size_t>(std::max_element(cs.begin(), cs.end()) - cs.begin());
  if (cs[j] <= 0.0) throw refinement_failed("refine_resonance: no resolvable oscillation in the bracket");
  if (j == 0 || j + 1 == cs.size())
    throw refinement_failed("refine_resonance: contrast maximum at the bracket edge; widen the sweep");
  constexpr double slack = 1e-3;
  for (std::size_t i = 0; i < j; ++i)
    if (cs[i] > cs[i + 1] + slack) throw refinement_failed("refine_resonance: contrast is not unimodal in the bracket");
  for (std::size_t i = j + 1; i < cs.size(); ++i)
    if (cs[i] > cs[i - 1] + slack) throw refinement_failed("refine_resonance: contrast is not unimodal in the bracket");

  // Golden-section search on the coarse neighbourhood of the maximum.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = xs[j - 1], b = xs[j + 1];
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = probe(x1, periods).contrast, f2 = probe(x2, periods).contrast;
  while (b - a > opt.rel_tol * 0.5 * (a + b)) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = probe(x1, periods).contrast;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = probe(x2, periods).contrast;
    }
  }
  res.omega = 0.5 * (a + b);
  res.contrast = std::max(f1, f2);

  // Lorentzian over all final-window probes; falls back to the golden-section interval.
  std::vector<detail::ContrastSample> pts;
  for (const auto& [pw, smp] : samples)
    if (pw == periods) pts.push_back(smp);
  const double c_flank = cs[j - 1] < cs[j + 1] ? cs[j - 1] : cs[j + 1];
  const double d_flank = xs[j + 1] - xs[j];
  double width0 = d_flank;
  if (c_flank > 0.0 && c_flank < res.contrast) width0 = d_flank * std::sqrt(c_flank / (res.contrast - c_flank));
  const auto lf = detail::fit_lineshape(pts, res.omega, res.contrast, width0);
  if (lf && std::abs(lf->center - res.omega) < d_flank && lf->sigma_center < d_flank) {
    res.omega = lf->center;
    res.sigma_omega = lf->sigma_center;
  } else {
    res.sigma_omega = 0.5 * (b - a);
  }
  return res;
}

}  // namespace qgeom
