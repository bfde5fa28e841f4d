#pragma once

#include <string>
#include <vector>

#include "qsol/cumulants.hpp"
#include "qsol/soliton.hpp"

namespace qsol {

// Declarative run description; the JSON schema mirrors the member grouping.
// Site pairs are 1-based in configs and output files, 0-based internally.
struct RunConfig {
  // lattice
  int n_sites = 15;

  // soliton
  std::string kind = "twisted";
  int twists = 2;  // sign changes, multi_twisted only
  double omega = 10.0;

  // quantum
  double el = 0.01;
  double gamma = 0.0;

  // integration
  double z_max = 1.5;
  double step = 1e-3;
  int output_stride = 10;
  bool adaptive = false;

  // experiment
  std::string mode = "propagate";
  bool has_pair = false;
  int pair_k = 0;  // 1-based when set
  int pair_l = 0;
  std::vector<double> sweep_el;
  std::vector<double> sweep_gamma;
  double err_cap = 1.5e-3;
  int workers = 1;

  // output
  std::string directory = ".";
  std::vector<std::string> formats = {"csv", "json"};
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
void validate_config(const RunConfig& config);

// Stable identifier used in sweep rows and error reports.
const char* error_code_name(ErrorCode code);

// Canonical serialization (fixed key order) and its FNV-1a hash, stamped into
// every artifact header.  The output section is excluded so runs that differ
// only in destination carry the same hash.
std::string canonical_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

SystemParams to_system_params(const RunConfig& config);
SolitonKind to_soliton_kind(const RunConfig& config);

// The two dominant adjacent sites of a profile, the default pair for the
// propagate and enmap experiments.  0-based.
std::pair<Index, Index> central_pair(const SolitonProfile& profile);

struct TrajectoryPoint {
  double z = 0.0;
  double entanglement = 0.0;
  double err = 0.0;
  double power = 0.0;
};

struct TrajectoryResult {
  SolitonProfile profile;
  Index pair_k = 0;  // 0-based
  Index pair_l = 0;
  std::vector<TrajectoryPoint> points;
  std::vector<CoupledState> snapshots;
  double z_valid = 0.0;
  double z_star = 0.0;   // argmax of E_N over snapshots with z <= z_valid
  double en_star = 0.0;  // E_N at z_star
};

TrajectoryResult run_trajectory(const RunConfig& config);

struct SweepRow {
  double el = 0.0;
  double gamma = 0.0;
  double max_en = 0.0;
  double z_star = 0.0;
  double z_valid = 0.0;
  std::string status = "ok";
};

std::vector<SweepRow> run_sweep_grid(const RunConfig& config);

// Artifact writers; each returns the list of files written.
std::vector<std::string> run_soliton(const RunConfig& config);
std::vector<std::string> run_propagate(const RunConfig& config);
std::vector<std::string> run_enmap(const RunConfig& config);
std::vector<std::string> run_sweep(const RunConfig& config);

// Dispatch on config.mode.
std::vector<std::string> run_experiment(const RunConfig& config);

}  // namespace qsol
