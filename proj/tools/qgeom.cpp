#include <CLI11.hpp>

#include <iostream>

#include "qgeom/cli.hpp"

int main(int argc, char** argv) {
  namespace qc = qgeom::cli;
  CLI::App app{"qgeom: geometric-tensor measurement simulator for a driven two-level system"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> frame;

  for (const auto& name : qc::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration (schema v1)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "RNG seed for shot noise");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_option("--frame", frame, "simulation frame")->check(CLI::IsMember({"effective", "lab"}));
  }

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  qc::RunConfig rc;
  try {
    rc = config_path.empty() ? qc::parse_config_text(R"({"schema_version": 1})") : qc::load_config(config_path);
    if (seed) rc.exp.seed = *seed;
    if (threads) rc.exp.threads = *threads;
    if (frame) {
      const bool lab = *frame == "lab";
      if (lab != (rc.exp.frame == qgeom::Frame::lab)) rc.exp.integrator.reset();
      rc.exp.frame = lab ? qgeom::Frame::lab : qgeom::Frame::effective;
    }
  } catch (const qgeom::error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return qc::exit_config;
  }
  return qc::execute(cmd, rc, out_dir, std::cerr);
}
