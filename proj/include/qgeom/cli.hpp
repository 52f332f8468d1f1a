#pragma once

// Command-line front end: strict JSON run configuration, command drivers and
// CSV / JSON-sidecar output.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "qgeom/control.hpp"
#include "qgeom/dynamics.hpp"
#include "qgeom/errors.hpp"
#include "qgeom/extract.hpp"
#include "qgeom/floquet.hpp"
#include "qgeom/model.hpp"
#include "qgeom/parallel.hpp"
#include "qgeom/rabi_fit.hpp"
#include "qgeom/vexp.hpp"

namespace qgeom::cli {

using json = nlohmann::json;

inline constexpr const char* tool_version = "0.1.0";
inline constexpr int schema_version = 1;

// Raised for malformed or out-of-range configuration; maps to exit code 2.
class config_error : public error {
 public:
  using error::error;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_numerical = 3;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double to_hz(double omega) { return omega / (2.0 * pi); }

// ---------------------------------------------------------------- config

struct AnalyticBlock {
  std::vector<double> theta = uniform_grid(0.0, pi, 19);
  std::vector<double> r{0.0};
};

struct SweepBlock {
  std::optional<std::vector<double>> omega;  // absolute, rad/s
  std::vector<double> omega_relative = uniform_grid(0.8, 1.2, 81);
};

struct RabiBlock {
  std::optional<double> omega;
  bool refine = true;
  int periods = 120;
  std::string sampling = "stroboscopic";
  int samples = 241;
};

struct QgtBlock {
  std::vector<double> theta{pi / 6, pi / 4, pi / 3, 5 * pi / 12, pi / 2, 7 * pi / 12, 2 * pi / 3, 3 * pi / 4, 5 * pi / 6};
  double a_theta = 0.1;
  double a_phi = 0.1;
  bool refine = true;
};

struct ChernBlock {
  int theta_count = 19;
  double a = 0.1;
};

struct FloquetBlock {
  std::vector<double> theta{pi / 6, pi / 2, 5 * pi / 6};
  double a = 0.1;
  bool brute_force = false;
};

struct VerifyBlock {
  double duration = 1e-6;
  int samples = 501;
  double misrotation = 0.2;
};

struct RunConfig {
  ExperimentConfig exp;
  AnalyticBlock analytic;
  SweepBlock sweep;
  RabiBlock rabi;
  QgtBlock qgt;
  ChernBlock chern;
  FloquetBlock floquet;
  VerifyBlock verify_prep;
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw config_error(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw config_error(where + ": unknown key '" + k + "'");
}

inline double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw config_error(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw config_error(where + ": must be finite");
  return v;
}

inline long long get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw config_error(where + ": expected an integer");
  return j.get<long long>();
}

inline bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw config_error(where + ": expected true/false");
  return j.get<bool>();
}

inline std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw config_error(where + ": expected a string");
  return j.get<std::string>();
}

// A grid is either a list of numbers or {"start", "stop", "count"}.
inline std::vector<double> get_grid(const json& j, const std::string& where) {
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], where + "[" + std::to_string(i) + "]"));
  } else if (j.is_object()) {
    check_keys(j, {"start", "stop", "count"}, where);
    if (!j.contains("start") || !j.contains("stop") || !j.contains("count"))
      throw config_error(where + ": grid needs start, stop and count");
    const long long n = get_int(j["count"], where + ".count");
    if (n < 1 || n > 1000000) throw config_error(where + ".count: out of range");
    out = uniform_grid(get_number(j["start"], where + ".start"), get_number(j["stop"], where + ".stop"),
                       static_cast<std::size_t>(n));
  } else {
    throw config_error(where + ": expected a list or {start, stop, count}");
  }
  if (out.empty()) throw config_error(where + ": empty grid");
  return out;
}

template <class T>
void maybe(const json& j, const char* key, T& dst, T (*get)(const json&, const std::string&), const std::string& where) {
  if (j.contains(key)) dst = get(j[key], where + "." + key);
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  using namespace detail;
  check_keys(j, {"schema_version", "params", "modulation", "frame", "omega0", "T_probe", "shots", "seed", "threads",
                 "phase_order", "omega_prep", "integrator", "analytic", "sweep", "rabi", "qgt", "chern", "floquet",
                 "verify_prep"},
             "config");
  if (!j.contains("schema_version")) throw config_error("config: schema_version is required");
  if (get_int(j["schema_version"], "schema_version") != schema_version)
    throw config_error("config: unsupported schema_version (expected 1)");
  RunConfig rc;
  ExperimentConfig& e = rc.exp;
  if (j.contains("params")) {
    const json& p = j["params"];
    check_keys(p, {"A", "theta0", "phi0", "r"}, "params");
    maybe(p, "A", e.params.A, get_number, "params");
    maybe(p, "theta0", e.params.theta0, get_number, "params");
    maybe(p, "phi0", e.params.phi0, get_number, "params");
    maybe(p, "r", e.params.r, get_number, "params");
  }
  e.spec.omega = e.params.A;  // placeholder; commands choose the modulation frequency
  if (j.contains("modulation")) {
    const json& m = j["modulation"];
    check_keys(m, {"kind", "a_theta", "a_phi", "omega"}, "modulation");
    if (m.contains("kind")) {
      const std::string k = get_string(m["kind"], "modulation.kind");
      if (k == "linear") e.spec.kind = ModulationKind::linear;
      else if (k == "elliptical") e.spec.kind = ModulationKind::elliptical;
      else throw config_error("modulation.kind: expected 'linear' or 'elliptical'");
    }
    maybe(m, "a_theta", e.spec.a_theta, get_number, "modulation");
    maybe(m, "a_phi", e.spec.a_phi, get_number, "modulation");
    if (m.contains("omega")) {
      rc.rabi.omega = get_number(m["omega"], "modulation.omega");
      e.spec.omega = *rc.rabi.omega;
    }
  }
  if (j.contains("frame")) {
    const std::string f = get_string(j["frame"], "frame");
    if (f == "effective") e.frame = Frame::effective;
    else if (f == "lab") e.frame = Frame::lab;
    else throw config_error("frame: expected 'effective' or 'lab'");
  }
  maybe(j, "omega0", e.omega0, get_number, "config");
  maybe(j, "T_probe", e.T_probe, get_number, "config");
  if (j.contains("shots") && !j["shots"].is_null()) e.shots = static_cast<int>(get_int(j["shots"], "shots"));
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      throw config_error("seed: expected a non-negative integer");
    e.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("threads")) {
    const long long t = get_int(j["threads"], "threads");
    if (t < 1 || t > 1024) throw config_error("threads: out of range");
    e.threads = static_cast<unsigned>(t);
  }
  if (j.contains("phase_order")) e.phase_order = static_cast<int>(get_int(j["phase_order"], "phase_order"));
  if (j.contains("omega_prep") && !j["omega_prep"].is_null()) e.omega_prep = get_number(j["omega_prep"], "omega_prep");
  if (j.contains("integrator")) {
    const json& ij = j["integrator"];
    check_keys(ij, {"scheme", "steps_per_period", "dt_max"}, "integrator");
    IntegratorConfig ic = e.frame == Frame::lab ? lab_integrator() : effective_integrator();
    if (ij.contains("scheme")) {
      const std::string s = get_string(ij["scheme"], "integrator.scheme");
      if (s == "midpoint") ic.scheme = StepScheme::midpoint_exponential;
      else if (s == "magnus4") ic.scheme = StepScheme::commutator_corrected;
      else throw config_error("integrator.scheme: expected 'midpoint' or 'magnus4'");
    }
    if (ij.contains("steps_per_period"))
      ic.steps_per_fastest_period = static_cast<int>(get_int(ij["steps_per_period"], "integrator.steps_per_period"));
    if (ij.contains("dt_max")) ic.dt_max = get_number(ij["dt_max"], "integrator.dt_max");
    e.integrator = ic;
  }
  if (j.contains("analytic")) {
    const json& b = j["analytic"];
    check_keys(b, {"theta", "r"}, "analytic");
    if (b.contains("theta")) rc.analytic.theta = get_grid(b["theta"], "analytic.theta");
    if (b.contains("r")) rc.analytic.r = get_grid(b["r"], "analytic.r");
  }
  if (j.contains("sweep")) {
    const json& b = j["sweep"];
    check_keys(b, {"omega", "omega_relative"}, "sweep");
    if (b.contains("omega") && b.contains("omega_relative"))
      throw config_error("sweep: give either omega or omega_relative");
    if (b.contains("omega")) rc.sweep.omega = get_grid(b["omega"], "sweep.omega");
    if (b.contains("omega_relative")) rc.sweep.omega_relative = get_grid(b["omega_relative"], "sweep.omega_relative");
  }
  if (j.contains("rabi")) {
    const json& b = j["rabi"];
    check_keys(b, {"refine", "periods", "sampling", "samples"}, "rabi");
    maybe(b, "refine", rc.rabi.refine, get_bool, "rabi");
    if (b.contains("periods")) rc.rabi.periods = static_cast<int>(get_int(b["periods"], "rabi.periods"));
    if (b.contains("samples")) rc.rabi.samples = static_cast<int>(get_int(b["samples"], "rabi.samples"));
    maybe(b, "sampling", rc.rabi.sampling, get_string, "rabi");
    if (rc.rabi.sampling != "stroboscopic" && rc.rabi.sampling != "uniform")
      throw config_error("rabi.sampling: expected 'stroboscopic' or 'uniform'");
    if (rc.rabi.periods < 2 || rc.rabi.samples < 16) throw config_error("rabi: need periods >= 2 and samples >= 16");
  }
  if (j.contains("qgt")) {
    const json& b = j["qgt"];
    check_keys(b, {"theta", "a_theta", "a_phi", "refine"}, "qgt");
    if (b.contains("theta")) rc.qgt.theta = get_grid(b["theta"], "qgt.theta");
    maybe(b, "a_theta", rc.qgt.a_theta, get_number, "qgt");
    maybe(b, "a_phi", rc.qgt.a_phi, get_number, "qgt");
    maybe(b, "refine", rc.qgt.refine, get_bool, "qgt");
  }
  if (j.contains("chern")) {
    const json& b = j["chern"];
    check_keys(b, {"theta_count", "a"}, "chern");
    if (b.contains("theta_count")) rc.chern.theta_count = static_cast<int>(get_int(b["theta_count"], "chern.theta_count"));
    maybe(b, "a", rc.chern.a, get_number, "chern");
    if (rc.chern.theta_count < 3 || rc.chern.theta_count % 2 == 0)
      throw config_error("chern.theta_count: must be odd and >= 3");
  }
  if (j.contains("floquet")) {
    const json& b = j["floquet"];
    check_keys(b, {"theta", "a", "brute_force"}, "floquet");
    if (b.contains("theta")) rc.floquet.theta = get_grid(b["theta"], "floquet.theta");
    maybe(b, "a", rc.floquet.a, get_number, "floquet");
    maybe(b, "brute_force", rc.floquet.brute_force, get_bool, "floquet");
  }
  if (j.contains("verify_prep")) {
    const json& b = j["verify_prep"];
    check_keys(b, {"duration", "samples", "misrotation"}, "verify_prep");
    maybe(b, "duration", rc.verify_prep.duration, get_number, "verify_prep");
    if (b.contains("samples")) rc.verify_prep.samples = static_cast<int>(get_int(b["samples"], "verify_prep.samples"));
    maybe(b, "misrotation", rc.verify_prep.misrotation, get_number, "verify_prep");
  }
  try {
    ModulationSpec probe = e.spec;
    probe.omega = e.params.A;
    ExperimentConfig check = e;
    check.spec = probe;
    check.params.validate();
    check.validate();
  } catch (const invalid_input& ex) {
    throw config_error(std::string("config: ") + ex.what());
  }
  return rc;
}

inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw config_error(std::string("config: JSON parse error: ") + ex.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Fully resolved configuration; feeding it back through parse_config reproduces the run.
inline json to_json(const RunConfig& rc) {
  const ExperimentConfig& e = rc.exp;
  json j;
  j["schema_version"] = schema_version;
  j["params"] = {{"A", e.params.A}, {"theta0", e.params.theta0}, {"phi0", e.params.phi0}, {"r", e.params.r}};
  j["modulation"] = {{"kind", to_string(e.spec.kind)}, {"a_theta", e.spec.a_theta}, {"a_phi", e.spec.a_phi}};
  if (rc.rabi.omega) j["modulation"]["omega"] = *rc.rabi.omega;
  j["frame"] = to_string(e.frame);
  j["omega0"] = e.omega0;
  j["T_probe"] = e.T_probe;
  j["shots"] = e.shots ? json(*e.shots) : json(nullptr);
  j["seed"] = e.seed;
  j["threads"] = e.threads;
  j["phase_order"] = e.phase_order;
  j["omega_prep"] = e.omega_prep ? json(*e.omega_prep) : json(nullptr);
  const IntegratorConfig ic = e.integrator_or_default();
  j["integrator"] = {{"scheme", ic.scheme == StepScheme::midpoint_exponential ? "midpoint" : "magnus4"},
                     {"steps_per_period", ic.steps_per_fastest_period}};
  if (std::isfinite(ic.dt_max)) j["integrator"]["dt_max"] = ic.dt_max;
  j["analytic"] = {{"theta", rc.analytic.theta}, {"r", rc.analytic.r}};
  if (rc.sweep.omega) j["sweep"] = {{"omega", *rc.sweep.omega}};
  else j["sweep"] = {{"omega_relative", rc.sweep.omega_relative}};
  j["rabi"] = {{"refine", rc.rabi.refine}, {"periods", rc.rabi.periods}, {"sampling", rc.rabi.sampling},
               {"samples", rc.rabi.samples}};
  j["qgt"] = {{"theta", rc.qgt.theta}, {"a_theta", rc.qgt.a_theta}, {"a_phi", rc.qgt.a_phi}, {"refine", rc.qgt.refine}};
  j["chern"] = {{"theta_count", rc.chern.theta_count}, {"a", rc.chern.a}};
  j["floquet"] = {{"theta", rc.floquet.theta}, {"a", rc.floquet.a}, {"brute_force", rc.floquet.brute_force}};
  j["verify_prep"] = {{"duration", rc.verify_prep.duration}, {"samples", rc.verify_prep.samples},
                      {"misrotation", rc.verify_prep.misrotation}};
  return j;
}

// ---------------------------------------------------------------- datasets

struct Dataset {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  json summary = json::object();
  std::vector<std::string> warnings;
  std::vector<json> failures;

  template <class... T>
  void add(const T&... cells) {
    rows.push_back({cell(cells)...});
  }

  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
};

inline void write_csv(std::ostream& os, const Dataset& d) {
  for (std::size_t i = 0; i < d.header.size(); ++i) os << (i ? "," : "") << d.header[i];
  os << '\n';
  for (const auto& r : d.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

namespace detail {

inline void merge_warnings(Dataset& d, const std::vector<std::string>& w) {
  for (const auto& s : w)
    if (std::find(d.warnings.begin(), d.warnings.end(), s) == d.warnings.end()) d.warnings.push_back(s);
}

inline PipelineOptions pipeline_options(const ExperimentConfig& e) {
  PipelineOptions o;
  o.frame = e.frame;
  o.omega0 = e.omega0;
  o.integrator = e.integrator;
  o.shots = e.shots;
  o.seed = e.seed;
  o.threads = 1;
  o.phase_order = e.phase_order;
  return o;
}

inline json resonance_json(double predicted, double refined) {
  return {{"predicted_rad_s", predicted},
          {"predicted_hz", to_hz(predicted)},
          {"refined_rad_s", refined},
          {"refined_hz", to_hz(refined)}};
}

}  // namespace detail

// ---------------------------------------------------------------- commands

inline Dataset cmd_analytic(const RunConfig& rc) {
  Dataset d;
  d.header = {"theta_rad", "r", "g_tt", "g_pp", "g_tp", "f_tp", "gap_rad_s", "gap_hz", "theta_prime_rad", "flag"};
  const double A = rc.exp.params.A;
  for (double r : rc.analytic.r) {
    if (!(r >= 0.0)) throw config_error("analytic.r: values must be non-negative");
    for (double th : rc.analytic.theta) {
      try {
        const auto q = analytic_qgt(th, r);
        const double gap = spectral_gap(th, A, r);
        d.add(th, r, q.g_tt, q.g_pp, q.g_tp, q.f_tp, gap, to_hz(gap), eigenstate_angle(th, r), "");
      } catch (const singularity_error&) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        d.add(th, r, nan, nan, nan, nan, 0.0, 0.0, nan, "degenerate");
        std::ostringstream os;
        os << "degenerate point theta=" << format_double(th) << " r=" << format_double(r);
        d.warnings.push_back(os.str());
      }
    }
  }
  return d;
}

inline Dataset cmd_sweep(const RunConfig& rc) {
  Dataset d;
  ExperimentConfig e = rc.exp;
  const ModulationSpec base = e.modulation();
  const double w_pred = predict_resonance(base, e.params);
  std::vector<double> grid;
  if (rc.sweep.omega) {
    grid = *rc.sweep.omega;
  } else {
    for (double x : rc.sweep.omega_relative) grid.push_back(x * w_pred);
  }
  e.spec.omega = grid.front();
  detail::merge_warnings(d, e.warnings());
  const ResonanceScan scan = resonance_sweep(e, grid);
  d.header = {"omega_rad_s", "omega_hz", "omega_over_resonance", "p0"};
  for (std::size_t i = 0; i < grid.size(); ++i) d.add(grid[i], to_hz(grid[i]), grid[i] / w_pred, scan.p0[i]);
  const double dip = scan.dip_center();
  d.summary["resonance"] = {{"predicted_rad_s", w_pred},
                            {"predicted_hz", to_hz(w_pred)},
                            {"dip_center_rad_s", dip},
                            {"dip_center_hz", to_hz(dip)},
                            {"dip_over_predicted", dip / w_pred}};
  return d;
}

inline Dataset cmd_rabi(const RunConfig& rc) {
  Dataset d;
  ExperimentConfig e = rc.exp;
  const ModulationSpec base = e.modulation();
  const double w_pred = predict_resonance(base, e.params);
  double w = rc.rabi.omega.value_or(w_pred);
  e.spec.omega = w;
  detail::merge_warnings(d, e.warnings());
  if (!rc.rabi.omega && rc.rabi.refine) {
    try {
      w = refine_resonance(e, w_pred).omega;
    } catch (const refinement_failed& ex) {
      d.warnings.push_back(std::string("refinement failed, using predicted resonance: ") + ex.what());
    }
  }
  std::vector<double> times;
  if (rc.rabi.sampling == "stroboscopic") {
    times = stroboscopic_grid(w, rc.rabi.periods, rc.rabi.samples);
  } else {
    times = uniform_grid(0.0, rc.rabi.periods * 2.0 * pi / w, static_cast<std::size_t>(rc.rabi.samples));
  }
  const RabiTrace tr = rabi_experiment(e, w, times);
  d.header = {"t_s", "p0"};
  for (std::size_t i = 0; i < tr.times.size(); ++i) d.add(tr.times[i], tr.p0[i]);
  d.summary["resonance"] = detail::resonance_json(w_pred, w);
  double predicted_rabi = std::numeric_limits<double>::quiet_NaN();
  try {
    predicted_rabi = predict_rabi(base.with_omega(w_pred), e.params);
  } catch (const error&) {
  }
  json fit;
  try {
    const RabiFit f = fit_rabi(tr);
    fit = {{"omega_rabi_rad_s", f.omega_rabi},
           {"omega_rabi_hz", to_hz(f.omega_rabi)},
           {"omega_rabi_over_resonance", f.omega_rabi / w},
           {"sigma_omega_rad_s", f.sigma_omega},
           {"contrast", f.contrast},
           {"offset", f.offset},
           {"rms_residual", f.rms_residual},
           {"periods", f.periods}};
  } catch (const error& ex) {
    fit = {{"error", ex.what()}};
    d.failures.push_back({{"stage", "fit"}, {"message", ex.what()}});
  }
  fit["predicted_omega_rabi_rad_s"] = predicted_rabi;
  d.summary["fit"] = fit;
  return d;
}

inline Dataset cmd_qgt(const RunConfig& rc) {
  Dataset d;
  d.header = {"theta_rad",      "r",         "g_tt",      "g_pp",        "g_tp",        "f_tp",
              "sigma_g_tt",     "sigma_g_pp", "sigma_g_tp", "sigma_f_tp",  "g_tt_theory", "g_pp_theory",
              "g_tp_theory",    "f_tp_theory", "omega_predicted_rad_s", "omega_refined_rad_s",
              "omega_refined_hz", "status"};
  const ExperimentConfig& e = rc.exp;
  PipelineOptions o = detail::pipeline_options(e);
  o.refine = rc.qgt.refine;
  ModulationSpec probe = e.spec;
  probe.a_theta = rc.qgt.a_theta;
  probe.a_phi = rc.qgt.a_phi;
  detail::merge_warnings(d, probe.warnings());
  if (e.frame == Frame::lab) detail::merge_warnings(d, rwa_warnings(e.omega0, e.params.A));
  struct Out {
    std::optional<QGTEstimate> est;
    std::string err;
  };
  const auto results = parallel_map(rc.qgt.theta.size(), e.threads, [&](std::size_t i) {
    StaticParams p = e.params;
    p.theta0 = rc.qgt.theta[i];
    PipelineOptions oi = o;
    oi.seed = mix_seed(e.seed, i);
    Out out;
    try {
      out.est = measure_qgt(p, rc.qgt.a_theta, rc.qgt.a_phi, oi);
    } catch (const invalid_input&) {
      throw;
    } catch (const error& ex) {
      out.err = ex.what();
    }
    return out;
  });
  json res = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const double th = rc.qgt.theta[i];
    const auto& r = results[i];
    if (!r.est) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      d.add(th, e.params.r, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, "failed");
      d.failures.push_back({{"theta_rad", th}, {"message", r.err}});
      continue;
    }
    const QGTEstimate& q = *r.est;
    const auto t = analytic_qgt(th, e.params.r);
    d.add(th, q.r, q.g_tt, q.g_pp, q.g_tp, q.f_tp, q.sigma_g_tt, q.sigma_g_pp, q.sigma_g_tp, q.sigma_f_tp, t.g_tt, t.g_pp,
          t.g_tp, t.f_tp, q.omega_predicted, q.omega_refined, to_hz(q.omega_refined), "ok");
    json pr = detail::resonance_json(q.omega_predicted, q.omega_refined);
    pr["theta_rad"] = th;
    res.push_back(pr);
    for (const auto& run : q.runs)
      if (!run.resolved) {
        std::ostringstream os;
        os << "theta=" << format_double(th) << " run " << run.label << ": " << run.note << " (Omega taken as 0)";
        d.warnings.push_back(os.str());
      }
  }
  d.summary["resonance"] = res;
  return d;
}

inline Dataset cmd_chern(const RunConfig& rc) {
  Dataset d;
  const ExperimentConfig& e = rc.exp;
  PipelineOptions o = detail::pipeline_options(e);
  o.threads = e.threads;
  const auto grid = uniform_grid(0.0, pi, static_cast<std::size_t>(rc.chern.theta_count));
  const CurvatureScan scan = curvature_scan(e.params.r, grid, o, rc.chern.a, e.params.A, e.params.phi0);
  d.header = {"theta_rad", "f_measured", "f_analytic", "sigma_f", "g_tt", "g_pp", "g_tp",
              "omega_predicted_rad_s", "omega_refined_rad_s", "status"};
  for (const auto& p : scan.points) {
    d.add(p.theta, p.f_measured, p.f_analytic, p.sigma, p.measured.g_tt, p.measured.g_pp, p.measured.g_tp,
          p.omega_predicted, p.omega_refined, to_string(p.status));
    if (p.status != ScanStatus::ok)
      d.failures.push_back({{"theta_rad", p.theta}, {"status", to_string(p.status)}, {"message", p.message}});
  }
  json c;
  c["r"] = e.params.r;
  c["expected_class"] = std::abs(e.params.r - 1.0) < 1e-12 ? json(nullptr) : json(chern_class(e.params.r));
  try {
    const ChernResult cf = chern_from_scan(scan);
    const ChernResult cm = chern_from_scan(scan, true);
    c["from_curvature"] = cf.value;
    c["from_metric"] = cm.value;
    c["rule"] = cf.rule;
    c["points"] = cf.points;
  } catch (const error& ex) {
    c["error"] = ex.what();
    d.warnings.push_back(std::string("Chern number unavailable: ") + ex.what());
  }
  d.summary["chern"] = c;
  return d;
}

inline Dataset cmd_floquet(const RunConfig& rc) {
  Dataset d;
  const ExperimentConfig& e = rc.exp;
  const double a = rc.floquet.a;
  struct Family {
    const char* name;
    ModulationKind kind;
    double at, ap;
  };
  const std::vector<Family> fams = {{"theta-only", ModulationKind::linear, a, 0.0},
                                    {"phi-only", ModulationKind::linear, 0.0, a},
                                    {"linear", ModulationKind::linear, a, a},
                                    {"elliptical+", ModulationKind::elliptical, a, a},
                                    {"elliptical-", ModulationKind::elliptical, a, -a}};
  d.header = {"family", "theta_rad", "a_theta", "a_phi", "omega_res_rad_s", "omega_res_hz", "rabi_floquet_rad_s",
              "rabi_first_order_rad_s", "rabi_geometry_rad_s", "rabi_fitted_rad_s", "relative_error"};
  const std::size_t n = fams.size() * rc.floquet.theta.size();
  PipelineOptions o = detail::pipeline_options(e);
  o.refine = false;
  struct Row {
    std::vector<std::string> cells;
    std::string err;
  };
  const auto rows = parallel_map(n, e.threads, [&](std::size_t k) {
    const Family& f = fams[k % fams.size()];
    StaticParams p = e.params;
    p.theta0 = rc.floquet.theta[k / fams.size()];
    ModulationSpec s;
    s.kind = f.kind;
    s.a_theta = f.at;
    s.a_phi = f.ap;
    s = s.with_base(p);
    Row row;
    try {
      const double w = predict_resonance(s, p);
      s.omega = w;
      const double pf = predict_rabi(s, p);
      double fitted = std::numeric_limits<double>::quiet_NaN();
      double rel = std::numeric_limits<double>::quiet_NaN();
      if (rc.floquet.brute_force) {
        const RunRecord rec = acquire_run(pipeline_config(p, s, o), w, o, f.name);
        fitted = rec.omega_rabi;
        if (pf > 0.0) rel = (fitted - pf) / pf;
      }
      row.cells = {f.name,
                   format_double(p.theta0),
                   format_double(f.at),
                   format_double(f.ap),
                   format_double(w),
                   format_double(to_hz(w)),
                   format_double(pf),
                   format_double(rabi_first_order(s, p)),
                   format_double(rabi_from_geometry(s, p)),
                   format_double(fitted),
                   format_double(rel)};
    } catch (const invalid_input&) {
      throw;
    } catch (const error& ex) {
      row.err = ex.what();
      row.cells = {f.name, format_double(p.theta0), format_double(f.at), format_double(f.ap)};
      row.cells.resize(11, "nan");
    }
    return row;
  });
  for (const auto& r : rows) {
    d.rows.push_back(r.cells);
    if (!r.err.empty()) d.failures.push_back({{"family", r.cells[0]}, {"theta_rad", r.cells[1]}, {"message", r.err}});
  }
  return d;
}

inline Dataset cmd_verify_prep(const RunConfig& rc) {
  Dataset d;
  const ExperimentConfig& e = rc.exp;
  const StaticParams& p = e.params;
  const SpinState psi = (e.frame == Frame::lab && e.omega_prep) ? prepare_state_pulsed(p, e.omega0, *e.omega_prep)
                                                                 : prepare_state(p);
  const double tp_off = eigenstate_angle(p.theta0, p.r) + rc.verify_prep.misrotation;
  const SpinState mis = rotation(tp_off, -std::sin(p.phi0), std::cos(p.phi0), 0.0).apply(SpinState::up());
  const auto a = verify_preparation(psi, p, rc.verify_prep.duration, rc.verify_prep.samples);
  const auto b = verify_preparation(mis, p, rc.verify_prep.duration, rc.verify_prep.samples);
  d.header = {"t_s", "p_g_eigenstate", "p_g_misrotated"};
  for (std::size_t i = 0; i < a.times.size(); ++i) d.add(a.times[i], a.p_g[i], b.p_g[i]);
  d.summary["eigenstate"] = {{"min_p_g", a.min()}, {"contrast", a.contrast()}};
  d.summary["misrotated"] = {{"misrotation_rad", rc.verify_prep.misrotation}, {"min_p_g", b.min()}, {"contrast", b.contrast()}};
  return d;
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"analytic", "sweep", "rabi", "qgt", "chern", "floquet", "verify-prep"};
  return names;
}

inline Dataset run_command(const std::string& cmd, const RunConfig& rc) {
  if (cmd == "analytic") return cmd_analytic(rc);
  if (cmd == "sweep") return cmd_sweep(rc);
  if (cmd == "rabi") return cmd_rabi(rc);
  if (cmd == "qgt") return cmd_qgt(rc);
  if (cmd == "chern") return cmd_chern(rc);
  if (cmd == "floquet") return cmd_floquet(rc);
  if (cmd == "verify-prep") return cmd_verify_prep(rc);
  throw config_error("unknown command '" + cmd + "'");
}

inline json sidecar(const std::string& cmd, const RunConfig& rc, const Dataset& d, double wall_time_s) {
  json s;
  s["command"] = cmd;
  s["tool"] = "qgeom";
  s["version"] = tool_version;
  s["seed"] = rc.exp.seed;
  s["config"] = to_json(rc);
  s["defaults"] = {{"A_rad_s", StaticParams{}.A}, {"omega0_rad_s", default_omega0}};
  s["columns"] = d.header;
  s["units"] = "angles in rad; *_rad_s in rad/s; *_hz in cycles/s; t_s in s";
  s["summary"] = d.summary;
  s["warnings"] = d.warnings;
  s["failures"] = d.failures;
  s["wall_time_s"] = wall_time_s;
  return s;
}

// Runs `cmd`, writes <out>/<cmd>.csv and <out>/<cmd>.json; returns the exit code.
inline int execute(const std::string& cmd, const RunConfig& rc, const std::filesystem::path& out, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  Dataset d;
  try {
    d = run_command(cmd, rc);
  } catch (const config_error& ex) {
    log << "config error: " << ex.what() << '\n';
    return exit_config;
  } catch (const invalid_input& ex) {
    log << "config error: " << ex.what() << '\n';
    return exit_config;
  } catch (const error& ex) {
    log << "numerical error: " << ex.what() << '\n';
    return exit_numerical;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  const auto csv = out / (cmd + ".csv");
  const auto side = out / (cmd + ".json");
  std::ofstream c(csv, std::ios::binary);
  std::ofstream s(side, std::ios::binary);
  if (!c || !s) {
    log << "config error: cannot write to " << out.string() << '\n';
    return exit_config;
  }
  write_csv(c, d);
  s << sidecar(cmd, rc, d, wall).dump(2) << '\n';
  for (const auto& w : d.warnings) log << "warning: " << w << '\n';
  log << "wrote " << csv.string() << " (" << d.rows.size() << " rows)\n";
  return exit_ok;
}

}  // namespace qgeom::cli
