#pragma once

// Inversion of fitted Rabi frequencies into the quantum geometric tensor, and the
// pipeline / scan drivers built on the virtual experiment.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qgeom/errors.hpp"
#include "qgeom/floquet.hpp"
#include "qgeom/model.hpp"
#include "qgeom/parallel.hpp"
#include "qgeom/rabi_fit.hpp"
#include "qgeom/vexp.hpp"

namespace qgeom {

// g = Omega^2 / (a^2 omega^2)
inline double metric_diagonal(double omega_rabi, double a, double omega_res) {
  if (a == 0.0) throw invalid_input("metric_diagonal: zero modulation amplitude");
  if (!(omega_res > 0.0)) throw invalid_input("metric_diagonal: resonance must be positive");
  return omega_rabi * omega_rabi / (a * a * omega_res * omega_res);
}

// g_tp = (Omega+^2 - Omega-^2) / (4 a_t a_p omega^2), linear runs with +a_p and -a_p
inline double metric_offdiag(double omega_plus, double omega_minus, double a_t, double a_p, double omega_res) {
  if (a_t * a_p == 0.0) throw invalid_input("metric_offdiag: zero amplitude product");
  if (!(omega_res > 0.0)) throw invalid_input("metric_offdiag: resonance must be positive");
  return (omega_plus * omega_plus - omega_minus * omega_minus) / (4.0 * a_t * a_p * omega_res * omega_res);
}

// F = (Omega+^2 - Omega-^2) / (2 a_t a_p omega^2), elliptical runs of opposite chirality
inline double curvature(double omega_plus, double omega_minus, double a_t, double a_p, double omega_res) {
  if (a_t * a_p == 0.0) throw invalid_input("curvature: zero amplitude product");
  if (!(omega_res > 0.0)) throw invalid_input("curvature: resonance must be positive");
  return (omega_plus * omega_plus - omega_minus * omega_minus) / (2.0 * a_t * a_p * omega_res * omega_res);
}

struct PipelineOptions {
  Frame frame = Frame::effective;
  double omega0 = default_omega0;
  std::optional<IntegratorConfig> integrator;
  std::optional<int> shots;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int phase_order = 1;
  bool refine = true;
  RefineOptions refine_opts;
  int base_window_periods = 60;
  int max_doublings = 4;
  int max_samples = 241;
  double min_contrast = 0.05;  // below this at the longest window a run is reported unresolved
};

struct RunRecord {
  std::string label;
  ModulationSpec spec;
  double omega_rabi = 0.0;
  double sigma_omega = 0.0;
  double contrast = 0.0;
  int window_periods = 0;
  bool resolved = false;
  std::string note;

  // standard error of Omega^2; an unresolved run only bounds Omega below the resolution limit
  double sigma_omega_sq() const {
    if (resolved) return 2.0 * omega_rabi * sigma_omega;
    const double lim = 1.5 * spec.omega / window_periods;
    return lim * lim;
  }
};

struct QGTEstimate {
  double g_tt = 0.0, g_pp = 0.0, g_tp = 0.0, f_tp = 0.0;
  double sigma_g_tt = 0.0, sigma_g_pp = 0.0, sigma_g_tp = 0.0, sigma_f_tp = 0.0;
  double theta0 = 0.0, r = 0.0;
  double omega_predicted = 0.0;
  double omega_refined = 0.0;
  double sigma_omega_refined = 0.0;
  std::vector<RunRecord> runs;

  QGTComponents components() const { return {g_tt, g_pp, g_tp, f_tp}; }
};

inline ExperimentConfig pipeline_config(const StaticParams& params, const ModulationSpec& spec,
                                        const PipelineOptions& opt) {
  ExperimentConfig c;
  c.params = params;
  c.spec = spec;
  c.frame = opt.frame;
  c.omega0 = opt.omega0;
  c.shots = opt.shots;
  c.seed = opt.seed;
  c.integrator = opt.integrator;
  c.phase_order = opt.phase_order;
  c.threads = 1;
  return c;
}

// Acquires a stroboscopic trace at omega and fits it, doubling the window until the
// oscillation is resolved or the window limit is reached.
inline RunRecord acquire_run(const ExperimentConfig& cfg, double omega, const PipelineOptions& opt, std::string label) {
  RunRecord rec;
  rec.label = std::move(label);
  rec.spec = cfg.modulation().with_omega(omega);
  int periods = opt.base_window_periods;
  std::string last_error;
  for (int d = 0; d <= opt.max_doublings; ++d, periods *= 2) {
    rec.window_periods = periods;
    const auto times = stroboscopic_grid(omega, periods, opt.max_samples);
    const RabiTrace tr = rabi_experiment(cfg, omega, times);
    try {
      const RabiFit f = fit_rabi(tr);
      if (f.periods >= 2.0 && f.contrast >= opt.min_contrast) {
        rec.omega_rabi = f.omega_rabi;
        rec.sigma_omega = f.sigma_omega;
        rec.contrast = f.contrast;
        rec.resolved = true;
        return rec;
      }
      std::ostringstream os;
      os << "fit spans " << f.periods << " periods with contrast " << f.contrast;
      last_error = os.str();
    } catch (const error& e) {
      last_error = e.what();
    }
  }
  rec.omega_rabi = 0.0;
  rec.note = "unresolved at " + std::to_string(rec.window_periods) + " periods (" + last_error + ")";
  return rec;
}

inline QGTEstimate measure_qgt(const StaticParams& params, double a_t, double a_p, const PipelineOptions& opt = {}) {
  params.validate();
  if (a_t == 0.0 || a_p == 0.0) throw invalid_input("measure_qgt: both amplitudes must be non-zero");
  QGTEstimate est;
  est.theta0 = params.theta0;
  est.r = params.r;

  ModulationSpec lin;
  lin.kind = ModulationKind::linear;
  lin.a_theta = a_t;
  lin.a_phi = a_p;
  lin.theta0 = params.theta0;
  lin.phi0 = params.phi0;
  est.omega_predicted = predict_resonance(lin, params);
  lin.omega = est.omega_predicted;
  lin.validate();

  double w = est.omega_predicted;
  if (opt.refine) {
    try {
      const RefineResult rr = refine_resonance(pipeline_config(params, lin, opt), w, opt.refine_opts);
      w = rr.omega;
      est.sigma_omega_refined = rr.sigma_omega;
    } catch (const error& e) {
      throw refinement_failed(std::string("measure_qgt: resonance refinement (linear +a_phi run): ") + e.what());
    }
  }
  est.omega_refined = w;

  struct Job {
    const char* label;
    ModulationKind kind;
    double at, ap;
  };
  const std::vector<Job> jobs = {
      {"theta-only", ModulationKind::linear, a_t, 0.0},
      {"phi-only", ModulationKind::linear, 0.0, a_p},
      {"linear+", ModulationKind::linear, a_t, a_p},
      {"linear-", ModulationKind::linear, a_t, -a_p},
      {"elliptical+", ModulationKind::elliptical, a_t, a_p},
      {"elliptical-", ModulationKind::elliptical, a_t, -a_p},
  };
  est.runs = parallel_map(jobs.size(), opt.threads, [&](std::size_t i) {
    ModulationSpec s = lin;
    s.kind = jobs[i].kind;
    s.a_theta = jobs[i].at;
    s.a_phi = jobs[i].ap;
    PipelineOptions o = opt;
    o.seed = mix_seed(opt.seed, i);
    try {
      return acquire_run(pipeline_config(params, s, o), w, o, jobs[i].label);
    } catch (const error& e) {
      throw numerical_error(std::string("measure_qgt: run ") + jobs[i].label + ": " + e.what());
    }
  });

  const RunRecord& rt = est.runs[0];
  const RunRecord& rp = est.runs[1];
  const RunRecord& lp = est.runs[2];
  const RunRecord& lm = est.runs[3];
  const RunRecord& ep = est.runs[4];
  const RunRecord& em = est.runs[5];
  const double w2 = w * w;
  est.g_tt = metric_diagonal(rt.omega_rabi, a_t, w);
  est.g_pp = metric_diagonal(rp.omega_rabi, a_p, w);
  est.g_tp = metric_offdiag(lp.omega_rabi, lm.omega_rabi, a_t, a_p, w);
  // the counter-rotating (-a_phi) orbit couples through +F for the tracked state
  est.f_tp = curvature(em.omega_rabi, ep.omega_rabi, a_t, a_p, w);
  est.sigma_g_tt = rt.sigma_omega_sq() / (a_t * a_t * w2);
  est.sigma_g_pp = rp.sigma_omega_sq() / (a_p * a_p * w2);
  est.sigma_g_tp = std::hypot(lp.sigma_omega_sq(), lm.sigma_omega_sq()) / std::abs(4.0 * a_t * a_p * w2);
  est.sigma_f_tp = std::hypot(ep.sigma_omega_sq(), em.sigma_omega_sq()) / std::abs(2.0 * a_t * a_p * w2);
  // every component scales as omega_res^-2
  const double rel_w = 2.0 * est.sigma_omega_refined / w;
  est.sigma_g_tt = std::hypot(est.sigma_g_tt, rel_w * est.g_tt);
  est.sigma_g_pp = std::hypot(est.sigma_g_pp, rel_w * est.g_pp);
  est.sigma_g_tp = std::hypot(est.sigma_g_tp, rel_w * est.g_tp);
  est.sigma_f_tp = std::hypot(est.sigma_f_tp, rel_w * est.f_tp);
  return est;
}

enum class ScanStatus { ok, skipped, failed };

inline const char* to_string(ScanStatus s) {
  switch (s) {
    case ScanStatus::ok: return "ok";
    case ScanStatus::skipped: return "skipped";
    default: return "failed";
  }
}

struct CurvatureScanPoint {
  double theta = 0.0;
  double f_measured = 0.0;
  double f_analytic = 0.0;
  double sigma = 0.0;
  double omega_predicted = 0.0;
  double omega_refined = 0.0;
  QGTComponents measured{};
  ScanStatus status = ScanStatus::ok;
  std::string message;
};

struct CurvatureScan {
  double r = 0.0;
  std::vector<CurvatureScanPoint> points;

  std::vector<const CurvatureScanPoint*> failures() const {
    std::vector<const CurvatureScanPoint*> out;
    for (const auto& p : points)
      if (p.status != ScanStatus::ok) out.push_back(&p);
    return out;
  }
};

inline constexpr double scan_gap_guard = 0.05;  // in units of A

// Full QGT pipeline at each grid point. Endpoints 0 and pi are accepted so the grid can
// close the quadrature over the sphere; points with gap < 0.05 A are skipped.
inline CurvatureScan curvature_scan(double r, std::span<const double> theta_grid, const PipelineOptions& opt = {},
                                    double a = 0.1, double A = 2.0 * pi * 20e6, double phi0 = 0.0) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw invalid_input("curvature_scan: r must be non-negative");
  for (double t : theta_grid)
    if (!(t >= 0.0 && t <= pi)) throw invalid_input("curvature_scan: theta grid must lie in [0, pi]");
  CurvatureScan scan;
  scan.r = r;
  scan.points = parallel_map(theta_grid.size(), opt.threads, [&](std::size_t i) {
    CurvatureScanPoint pt;
    pt.theta = theta_grid[i];
    const double d = gap_factor_sq(pt.theta, r);
    if (std::sqrt(std::max(0.0, d)) < scan_gap_guard) {
      pt.status = ScanStatus::skipped;
      pt.message = "gap below 0.05 A (degeneracy neighbourhood)";
      return pt;
    }
    pt.f_analytic = analytic_qgt(pt.theta, r).f_tp;
    StaticParams p{A, pt.theta, phi0, r};
    PipelineOptions o = opt;
    o.threads = 1;
    o.seed = mix_seed(opt.seed, i);
    try {
      const QGTEstimate e = measure_qgt(p, a, a, o);
      pt.f_measured = e.f_tp;
      pt.sigma = e.sigma_f_tp;
      pt.measured = e.components();
      pt.omega_predicted = e.omega_predicted;
      pt.omega_refined = e.omega_refined;
    } catch (const error& e) {
      pt.status = ScanStatus::failed;
      pt.message = e.what();
    }
    return pt;
  });
  return scan;
}

// Chern number from the measured curvature (or metric) on the scan grid; any non-ok
// point breaks the uniform grid and raises a coverage error.
inline ChernResult chern_from_scan(const CurvatureScan& scan, bool from_metric = false) {
  std::vector<double> theta;
  std::vector<double> f;
  std::vector<QGTComponents> q;
  for (const auto& p : scan.points) {
    if (p.status != ScanStatus::ok) {
      std::ostringstream os;
      os << "chern_from_scan: point theta=" << p.theta << " is " << to_string(p.status) << " (" << p.message << ")";
      throw coverage_error(os.str());
    }
    theta.push_back(p.theta);
    f.push_back(p.f_measured);
    q.push_back(p.measured);
  }
  return from_metric ? chern_from_metric(theta, q) : chern_from_curvature(theta, f);
}

}  // namespace qgeom
