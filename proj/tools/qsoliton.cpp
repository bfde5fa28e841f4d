#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qsol/experiment.hpp"
#include "qsol/version.hpp"

namespace {

// Flag overrides collected during parsing; only set members touch the config.
struct Overrides {
  std::optional<int> n_sites;
  std::optional<std::string> kind;
  std::optional<int> twists;
  std::optional<double> omega;
  std::optional<double> el;
  std::optional<double> gamma;
  std::optional<double> z_max;
  std::optional<double> step;
  std::optional<int> output_stride;
  bool adaptive_on = false;
  bool adaptive_off = false;
  std::vector<int> pair;
  std::vector<double> sweep_el;
  std::vector<double> sweep_gamma;
  std::optional<double> err_cap;
  std::optional<int> workers;
  std::optional<std::string> directory;
  std::vector<std::string> formats;
};

void add_common_options(CLI::App* cmd, std::string& config_path, Overrides& o) {
  cmd->add_option("--config", config_path, "JSON run configuration file");
  cmd->add_option("--n-sites", o.n_sites, "number of waveguides");
  cmd->add_option("--kind", o.kind, "soliton kind: fundamental, twisted, multi_twisted");
  cmd->add_option("--twists", o.twists, "sign changes for multi_twisted");
  cmd->add_option("--omega", o.omega, "propagation constant");
  cmd->add_option("--L", o.el, "quantum fluctuation scale");
  cmd->add_option("--gamma", o.gamma, "absorption coefficient");
  cmd->add_option("--z-max", o.z_max, "propagation distance");
  cmd->add_option("--step", o.step, "integrator step");
  cmd->add_option("--output-stride", o.output_stride, "steps between recorded snapshots");
  cmd->add_flag("--adaptive", o.adaptive_on, "enable adaptive stepping");
  cmd->add_flag("--no-adaptive", o.adaptive_off, "force fixed stepping");
  cmd->add_option("--pair", o.pair, "1-based site pair, e.g. --pair 7 8")->expected(2);
  cmd->add_option("--sweep-L", o.sweep_el, "sweep grid L values")->expected(-1);
  cmd->add_option("--sweep-gamma", o.sweep_gamma, "sweep grid gamma values")->expected(-1);
  cmd->add_option("--err-cap", o.err_cap, "validity threshold on Err");
  cmd->add_option("--workers", o.workers, "sweep worker pool size");
  cmd->add_option("--out", o.directory, "output directory");
  cmd->add_option("--format", o.formats, "output formats (csv, json); repeatable");
}

void apply(const Overrides& o, qsol::RunConfig& c) {
  if (o.n_sites) c.n_sites = *o.n_sites;
  if (o.kind) c.kind = *o.kind;
  if (o.twists) c.twists = *o.twists;
  if (o.omega) c.omega = *o.omega;
  if (o.el) c.el = *o.el;
  if (o.gamma) c.gamma = *o.gamma;
  if (o.z_max) c.z_max = *o.z_max;
  if (o.step) c.step = *o.step;
  if (o.output_stride) c.output_stride = *o.output_stride;
  if (o.adaptive_on) c.adaptive = true;
  if (o.adaptive_off) c.adaptive = false;
  if (o.pair.size() == 2) {
    c.has_pair = true;
    c.pair_k = o.pair[0];
    c.pair_l = o.pair[1];
  }
  if (!o.sweep_el.empty()) c.sweep_el = o.sweep_el;
  if (!o.sweep_gamma.empty()) c.sweep_gamma = o.sweep_gamma;
  if (o.err_cap) c.err_cap = *o.err_cap;
  if (o.workers) c.workers = *o.workers;
  if (o.directory) c.directory = *o.directory;
  if (!o.formats.empty()) c.formats = o.formats;
}

int report_error(const char* code, int exit, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"]["code"] = code;
  j["error"]["message"] = message;
  j["error"]["exit"] = exit;
  std::cout << j.dump() << "\n";
  std::cerr << "qsoliton: " << message << "\n";
  return exit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete soliton quantum fluctuations: solve, propagate, map, sweep"};
  app.set_version_flag("--version", std::string(qsol::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  app.add_subcommand("soliton", "solve a stationary profile and its stability");
  app.add_subcommand("propagate", "propagate fluctuations and track pair entanglement");
  app.add_subcommand("enmap", "pairwise entanglement map at the optimal distance");
  app.add_subcommand("sweep", "max entanglement over an (L, gamma) grid");
  for (CLI::App* cmd : app.get_subcommands(nullptr))
    add_common_options(cmd, config_path, overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("config", 2, e.what());
  }

  try {
    qsol::RunConfig config =
        config_path.empty() ? qsol::RunConfig{} : qsol::load_config(config_path);
    config.mode = app.get_subcommands().front()->get_name();
    apply(overrides, config);
    qsol::validate_config(config);
    for (const std::string& file : qsol::run_experiment(config)) std::cout << file << "\n";
    return 0;
  } catch (const qsol::Error& e) {
    return report_error(qsol::error_code_name(e.code()), qsol::exit_status(e.code()), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", 3, e.what());
  }
}
