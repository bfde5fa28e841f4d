#include "qsol/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qsol/entanglement.hpp"
#include "qsol/version.hpp"

namespace qsol {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) fail(ErrorCode::config, "unknown key '" + item.key() + "' in " + where);
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& where, const char* key, double dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_number()) fail(ErrorCode::config, where + "." + key + " must be a number");
  return v->get<double>();
}

int get_integer(const json& obj, const std::string& where, const char* key, int dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) fail(ErrorCode::config, where + "." + key + " must be an integer");
  return v->get<int>();
}

bool get_flag(const json& obj, const std::string& where, const char* key, bool dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_boolean()) fail(ErrorCode::config, where + "." + key + " must be a boolean");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const char* key,
                       const std::string& dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_string()) fail(ErrorCode::config, where + "." + key + " must be a string");
  return v->get<std::string>();
}

std::vector<double> get_number_list(const json& v, const std::string& what) {
  if (!v.is_array()) fail(ErrorCode::config, what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(ErrorCode::config, what + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_artifact(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_failure, "cannot open " + path.string() + " for writing");
  return out;
}

// CSV artifacts carry the hash as a comment line; JSON artifacts carry it as
// top-level fields since JSON has no comment syntax.
void write_csv_header(std::ofstream& out, const std::string& hash) {
  out << "# config " << hash << " version " << kVersion << "\n";
}

ordered_json json_artifact(const RunConfig& config) {
  ordered_json j;
  j["config"] = config_hash(config);
  j["version"] = kVersion;
  return j;
}

void finish_artifact(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) fail(ErrorCode::io_failure, "failed writing " + path.string());
}

fs::path prepare_directory(const RunConfig& config) {
  fs::path dir(config.directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_failure, "cannot create directory " + dir.string());
  return dir;
}

bool wants(const RunConfig& config, const char* format) {
  return std::find(config.formats.begin(), config.formats.end(), format) != config.formats.end();
}

ordered_json complex_pairs(const VectorXc& v) {
  ordered_json arr = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i)
    arr.push_back({std::real(v(i)), std::imag(v(i))});
  return arr;
}

}  // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return "config";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::unsupported_omega: return "unsupported_omega";
    case ErrorCode::no_convergence: return "no_convergence";
    case ErrorCode::wrong_branch: return "wrong_branch";
    case ErrorCode::edge_leak: return "edge_leak";
    case ErrorCode::zero_scale: return "zero_scale";
    case ErrorCode::degenerate_denominator: return "degenerate_denominator";
    case ErrorCode::truncation_overflow: return "truncation_overflow";
    case ErrorCode::numerical_blowup: return "numerical_blowup";
    case ErrorCode::io_failure: return "io_failure";
  }
  return "unknown";
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail(ErrorCode::config, "config root must be an object");
  reject_unknown(root, "config",
                 {"lattice", "soliton", "quantum", "integration", "experiment", "output"});

  RunConfig c;
  const json empty = json::object();
  auto section = [&](const char* name) -> const json& {
    const json* s = find(root, name);
    if (!s) return empty;
    if (!s->is_object()) fail(ErrorCode::config, std::string(name) + " must be an object");
    return *s;
  };

  const json& lattice = section("lattice");
  reject_unknown(lattice, "lattice", {"n_sites", "boundary"});
  c.n_sites = get_integer(lattice, "lattice", "n_sites", c.n_sites);
  const std::string boundary = get_string(lattice, "lattice", "boundary", "open");
  if (boundary != "open") fail(ErrorCode::config, "lattice.boundary must be \"open\"");

  const json& soliton = section("soliton");
  reject_unknown(soliton, "soliton", {"kind", "omega", "twists"});
  c.kind = get_string(soliton, "soliton", "kind", c.kind);
  c.omega = get_number(soliton, "soliton", "omega", c.omega);
  c.twists = get_integer(soliton, "soliton", "twists", c.twists);
  if (find(soliton, "twists") && c.kind != "multi_twisted")
    fail(ErrorCode::config, "soliton.twists requires kind \"multi_twisted\"");

  const json& quantum = section("quantum");
  reject_unknown(quantum, "quantum", {"L", "gamma"});
  c.el = get_number(quantum, "quantum", "L", c.el);
  c.gamma = get_number(quantum, "quantum", "gamma", c.gamma);

  const json& integration = section("integration");
  reject_unknown(integration, "integration", {"z_max", "step", "output_stride", "adaptive"});
  c.z_max = get_number(integration, "integration", "z_max", c.z_max);
  c.step = get_number(integration, "integration", "step", c.step);
  c.output_stride = get_integer(integration, "integration", "output_stride", c.output_stride);
  c.adaptive = get_flag(integration, "integration", "adaptive", c.adaptive);

  const json& experiment = section("experiment");
  reject_unknown(experiment, "experiment",
                 {"mode", "pair", "sweep_grid", "err_cap", "workers"});
  c.mode = get_string(experiment, "experiment", "mode", c.mode);
  c.err_cap = get_number(experiment, "experiment", "err_cap", c.err_cap);
  c.workers = get_integer(experiment, "experiment", "workers", c.workers);
  if (const json* pair = find(experiment, "pair")) {
    if (!pair->is_array() || pair->size() != 2 || !(*pair)[0].is_number_integer() ||
        !(*pair)[1].is_number_integer())
      fail(ErrorCode::config, "experiment.pair must be a pair of site indices");
    c.has_pair = true;
    c.pair_k = (*pair)[0].get<int>();
    c.pair_l = (*pair)[1].get<int>();
  }
  if (const json* grid = find(experiment, "sweep_grid")) {
    if (!grid->is_object()) fail(ErrorCode::config, "experiment.sweep_grid must be an object");
    reject_unknown(*grid, "experiment.sweep_grid", {"L", "gamma"});
    if (const json* l = find(*grid, "L")) c.sweep_el = get_number_list(*l, "sweep_grid.L");
    if (const json* g = find(*grid, "gamma"))
      c.sweep_gamma = get_number_list(*g, "sweep_grid.gamma");
  }

  const json& output = section("output");
  reject_unknown(output, "output", {"directory", "formats"});
  c.directory = get_string(output, "output", "directory", c.directory);
  if (const json* formats = find(output, "formats")) {
    if (!formats->is_array()) fail(ErrorCode::config, "output.formats must be an array");
    c.formats.clear();
    for (const auto& f : *formats) {
      if (!f.is_string()) fail(ErrorCode::config, "output.formats entries must be strings");
      c.formats.push_back(f.get<std::string>());
    }
  }

  validate_config(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_failure, "cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate_config(const RunConfig& c) {
  if (c.n_sites < 2) fail(ErrorCode::config, "lattice.n_sites must be at least 2");
  if (c.kind != "fundamental" && c.kind != "twisted" && c.kind != "multi_twisted")
    fail(ErrorCode::config, "soliton.kind must be fundamental, twisted or multi_twisted");
  if (c.kind == "multi_twisted" && c.twists < 2)
    fail(ErrorCode::config, "soliton.twists must be at least 2");
  if (c.el < 0.0) fail(ErrorCode::config, "quantum.L must be nonnegative");
  if (c.gamma < 0.0) fail(ErrorCode::config, "quantum.gamma must be nonnegative");
  if (!(c.z_max > 0.0)) fail(ErrorCode::config, "integration.z_max must be positive");
  if (!(c.step > 0.0)) fail(ErrorCode::config, "integration.step must be positive");
  if (c.output_stride < 1) fail(ErrorCode::config, "integration.output_stride must be positive");
  if (c.mode != "soliton" && c.mode != "propagate" && c.mode != "enmap" && c.mode != "sweep")
    fail(ErrorCode::config, "experiment.mode must be soliton, propagate, enmap or sweep");
  if (c.has_pair) {
    if (c.pair_k < 1 || c.pair_k > c.n_sites || c.pair_l < 1 || c.pair_l > c.n_sites)
      fail(ErrorCode::config, "experiment.pair sites must lie in 1.." +
                                  std::to_string(c.n_sites));
    if (c.pair_k == c.pair_l) fail(ErrorCode::config, "experiment.pair sites must differ");
  }
  if (!(c.err_cap > 0.0)) fail(ErrorCode::config, "experiment.err_cap must be positive");
  if (c.workers < 1) fail(ErrorCode::config, "experiment.workers must be at least 1");
  if (c.mode == "sweep" && (c.sweep_el.empty() || c.sweep_gamma.empty()))
    fail(ErrorCode::config, "sweep mode needs nonempty sweep_grid.L and sweep_grid.gamma");
  for (double l : c.sweep_el)
    if (l < 0.0) fail(ErrorCode::config, "sweep_grid.L values must be nonnegative");
  for (double g : c.sweep_gamma)
    if (g < 0.0) fail(ErrorCode::config, "sweep_grid.gamma values must be nonnegative");
  if (c.formats.empty()) fail(ErrorCode::config, "output.formats must not be empty");
  for (const std::string& f : c.formats)
    if (f != "csv" && f != "json")
      fail(ErrorCode::config, "output.formats entries must be csv or json");
}

std::string canonical_json(const RunConfig& c) {
  ordered_json j;
  j["lattice"]["n_sites"] = c.n_sites;
  j["lattice"]["boundary"] = "open";
  j["soliton"]["kind"] = c.kind;
  j["soliton"]["omega"] = c.omega;
  if (c.kind == "multi_twisted") j["soliton"]["twists"] = c.twists;
  j["quantum"]["L"] = c.el;
  j["quantum"]["gamma"] = c.gamma;
  j["integration"]["z_max"] = c.z_max;
  j["integration"]["step"] = c.step;
  j["integration"]["output_stride"] = c.output_stride;
  j["integration"]["adaptive"] = c.adaptive;
  j["experiment"]["mode"] = c.mode;
  if (c.has_pair) j["experiment"]["pair"] = {c.pair_k, c.pair_l};
  if (!c.sweep_el.empty()) j["experiment"]["sweep_grid"]["L"] = c.sweep_el;
  if (!c.sweep_gamma.empty()) j["experiment"]["sweep_grid"]["gamma"] = c.sweep_gamma;
  j["experiment"]["err_cap"] = c.err_cap;
  j["experiment"]["workers"] = c.workers;
  return j.dump();
}

std::string config_hash(const RunConfig& config) {
  const std::string text = canonical_json(config);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char byte : text) {
    h ^= byte;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SystemParams to_system_params(const RunConfig& c) {
  SystemParams p;
  p.n_sites = c.n_sites;
  p.omega = c.omega;
  p.quantum_scale = c.el;
  p.absorption = c.gamma;
  p.z_max = c.z_max;
  p.step = c.step;
  return p;
}

SolitonKind to_soliton_kind(const RunConfig& c) {
  if (c.kind == "fundamental") return SolitonKind::fundamental();
  if (c.kind == "twisted") return SolitonKind::twisted();
  return SolitonKind::multi_twisted(c.twists);
}

std::pair<Index, Index> central_pair(const SolitonProfile& profile) {
  const VectorXr& beta = profile.beta;
  Index k = 0;
  for (Index i = 1; i < beta.size(); ++i)
    if (std::abs(beta(i)) > std::abs(beta(k))) k = i;
  const Index left = k > 0 ? k - 1 : k + 1;
  const Index right = k + 1 < beta.size() ? k + 1 : k - 1;
  const Index mate = std::abs(beta(right)) >= std::abs(beta(left)) ? right : left;
  return {std::min(k, mate), std::max(k, mate)};
}

TrajectoryResult run_trajectory(const RunConfig& config) {
  validate_config(config);
  const SystemParams params = to_system_params(config);
  TrajectoryResult out;
  out.profile = solve_soliton(seed_profile(to_soliton_kind(config), params), params);
  if (config.has_pair) {
    out.pair_k = config.pair_k - 1;
    out.pair_l = config.pair_l - 1;
  } else {
    std::tie(out.pair_k, out.pair_l) = central_pair(out.profile);
  }

  PropagateOptions options;
  options.output_stride = config.output_stride;
  options.adaptive = config.adaptive;
  const MomentState init = initial_state(out.profile, params);
  out.snapshots = propagate_with_cumulants(init, params, options);

  std::vector<ValiditySample> series;
  series.reserve(out.snapshots.size());
  for (const CoupledState& s : out.snapshots) {
    TrajectoryPoint pt;
    pt.z = s.moments.z;
    pt.entanglement = log_negativity(s.moments, params, out.pair_k, out.pair_l);
    pt.err = err_metric(s.moments, s.kappa, params);
    pt.power = total_power(s.moments, params);
    out.points.push_back(pt);
    series.push_back({pt.z, pt.err});
  }
  out.z_valid = validity_horizon(series, config.err_cap, params.z_max);

  double best = -1.0;
  for (const TrajectoryPoint& pt : out.points) {
    if (pt.z > out.z_valid + 1e-12) break;
    if (pt.entanglement > best) {
      best = pt.entanglement;
      out.z_star = pt.z;
    }
  }
  out.en_star = std::max(best, 0.0);
  return out;
}

std::vector<SweepRow> run_sweep_grid(const RunConfig& config) {
  validate_config(config);
  std::vector<std::pair<double, double>> grid;
  for (double l : config.sweep_el)
    for (double g : config.sweep_gamma) grid.emplace_back(l, g);

  std::vector<SweepRow> rows(grid.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1)) {
      SweepRow& row = rows[i];
      row.el = grid[i].first;
      row.gamma = grid[i].second;
      RunConfig point = config;
      point.mode = "propagate";
      point.el = row.el;
      point.gamma = row.gamma;
      point.sweep_el.clear();
      point.sweep_gamma.clear();
      try {
        const TrajectoryResult traj = run_trajectory(point);
        row.max_en = traj.en_star;
        row.z_star = traj.z_star;
        row.z_valid = traj.z_valid;
      } catch (const Error& e) {
        row.status = error_code_name(e.code());
        row.max_en = row.z_star = row.z_valid = std::nan("");
      }
    }
  };

  const std::size_t pool =
      std::min<std::size_t>(static_cast<std::size_t>(config.workers), grid.size());
  if (pool <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(work);
    for (std::thread& t : threads) t.join();
  }
  return rows;
}

std::vector<std::string> run_soliton(const RunConfig& config) {
  validate_config(config);
  if (config.mode != "soliton") fail(ErrorCode::config, "run_soliton needs mode soliton");
  const SystemParams params = to_system_params(config);
  const SolitonProfile profile =
      solve_soliton(seed_profile(to_soliton_kind(config), params), params);
  const StabilityReport stability = linear_stability(profile);
  const std::string hash = config_hash(config);
  const fs::path dir = prepare_directory(config);
  std::vector<std::string> files;

  if (wants(config, "csv")) {
    const fs::path path = dir / "profile.csv";
    std::ofstream out = open_artifact(path);
    write_csv_header(out, hash);
    out << "site,beta\n";
    for (Index k = 0; k < profile.beta.size(); ++k)
      out << k + 1 << "," << format_double(profile.beta(k)) << "\n";
    finish_artifact(out, path);
    files.push_back(path.string());
  }
  if (wants(config, "json")) {
    ordered_json j = json_artifact(config);
    j["kind"] = profile.kind.name();
    j["sign_changes"] = profile.kind.sign_changes;
    j["omega"] = profile.omega;
    j["residual"] = profile.residual;
    j["edge_amplitude"] = edge_amplitude(profile.beta);
    j["beta"] = std::vector<double>(profile.beta.begin(), profile.beta.end());
    j["stability"]["max_growth_rate"] = stability.max_growth_rate;
    j["stability"]["stable"] = stability.stable;
    j["stability"]["eigenvalues"] = complex_pairs(stability.eigenvalues);
    const fs::path path = dir / "profile.json";
    std::ofstream out = open_artifact(path);
    out << j.dump(2) << "\n";
    finish_artifact(out, path);
    files.push_back(path.string());
  }
  return files;
}

namespace {

ordered_json trajectory_summary(const RunConfig& config, const TrajectoryResult& traj) {
  ordered_json j = json_artifact(config);
  j["kind"] = traj.profile.kind.name();
  j["omega"] = traj.profile.omega;
  j["L"] = config.el;
  j["gamma"] = config.gamma;
  j["pair"] = {traj.pair_k + 1, traj.pair_l + 1};
  j["err_cap"] = config.err_cap;
  j["z_valid"] = traj.z_valid;
  j["z_star"] = traj.z_star;
  j["E_N_star"] = traj.en_star;
  return j;
}

}  // namespace

std::vector<std::string> run_propagate(const RunConfig& config) {
  validate_config(config);
  if (config.mode != "propagate") fail(ErrorCode::config, "run_propagate needs mode propagate");
  const TrajectoryResult traj = run_trajectory(config);
  const std::string hash = config_hash(config);
  const fs::path dir = prepare_directory(config);
  std::vector<std::string> files;

  if (wants(config, "csv")) {
    const fs::path path = dir / "trajectory.csv";
    std::ofstream out = open_artifact(path);
    write_csv_header(out, hash);
    out << "z,E_N,Err,total_power\n";
    for (const TrajectoryPoint& pt : traj.points)
      out << format_double(pt.z) << "," << format_double(pt.entanglement) << ","
          << format_double(pt.err) << "," << format_double(pt.power) << "\n";
    finish_artifact(out, path);
    files.push_back(path.string());
  }
  if (wants(config, "json")) {
    const fs::path path = dir / "summary.json";
    std::ofstream out = open_artifact(path);
    out << trajectory_summary(config, traj).dump(2) << "\n";
    finish_artifact(out, path);
    files.push_back(path.string());
  }
  return files;
}

std::vector<std::string> run_enmap(const RunConfig& config) {
  validate_config(config);
  if (config.mode != "enmap") fail(ErrorCode::config, "run_enmap needs mode enmap");
  const TrajectoryResult traj = run_trajectory(config);
  const SystemParams params = to_system_params(config);

  std::size_t star = 0;
  for (std::size_t i = 0; i < traj.points.size(); ++i)
    if (traj.points[i].z == traj.z_star) star = i;
  const MatrixXr map = negativity_map(traj.snapshots[star].moments, params);

  const std::string hash = config_hash(config);
  const fs::path dir = prepare_directory(config);
  std::vector<std::string> files;

  if (wants(config, "csv")) {
    const fs::path path = dir / "enmap.csv";
    std::ofstream out = open_artifact(path);
    write_csv_header(out, hash);
    out << "# z_star " << format_double(traj.z_star) << "\n";
    for (Index i = 0; i < map.rows(); ++i) {
      for (Index j = 0; j < map.cols(); ++j)
        out << (j ? "," : "") << format_double(map(i, j));
      out << "\n";
    }
    finish_artifact(out, path);
    files.push_back(path.string());
  }
  if (wants(config, "json")) {
    ordered_json j = trajectory_summary(config, traj);
    j["map_max"] = map.maxCoeff();
    const fs::path path = dir / "summary.json";
    std::ofstream out = open_artifact(path);
    out << j.dump(2) << "\n";
    finish_artifact(out, path);
    files.push_back(path.string());
  }
  return files;
}

std::vector<std::string> run_sweep(const RunConfig& config) {
  validate_config(config);
  if (config.mode != "sweep") fail(ErrorCode::config, "run_sweep needs mode sweep");
  const std::vector<SweepRow> rows = run_sweep_grid(config);
  const std::string hash = config_hash(config);
  const fs::path dir = prepare_directory(config);
  std::vector<std::string> files;

  if (wants(config, "csv")) {
    const fs::path path = dir / "sweep.csv";
    std::ofstream out = open_artifact(path);
    write_csv_header(out, hash);
    out << "L,gamma,max_EN,z_star,z_valid,status\n";
    for (const SweepRow& row : rows)
      out << format_double(row.el) << "," << format_double(row.gamma) << ","
          << format_double(row.max_en) << "," << format_double(row.z_star) << ","
          << format_double(row.z_valid) << "," << row.status << "\n";
    finish_artifact(out, path);
    files.push_back(path.string());
  }
  if (wants(config, "json")) {
    ordered_json j = json_artifact(config);
    j["points"] = rows.size();
    int failed = 0;
    for (const SweepRow& row : rows) failed += row.status != "ok";
    j["failed"] = failed;
    const fs::path path = dir / "summary.json";
    std::ofstream out = open_artifact(path);
    out << j.dump(2) << "\n";
    finish_artifact(out, path);
    files.push_back(path.string());
  }
  return files;
}

std::vector<std::string> run_experiment(const RunConfig& config) {
  if (config.mode == "soliton") return run_soliton(config);
  if (config.mode == "propagate") return run_propagate(config);
  if (config.mode == "enmap") return run_enmap(config);
  if (config.mode == "sweep") return run_sweep(config);
  validate_config(config);
  fail(ErrorCode::config, "unknown experiment mode " + config.mode);
}

}  // namespace qsol
