#include "fsde/experiment.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "fsde/density.hpp"
#include "fsde/ergodic.hpp"
#include "fsde/errors.hpp"
#include "fsde/parallel.hpp"
#include "fsde/pathspace.hpp"
#include "fsde/rng.hpp"
#include "fsde/sha256.hpp"
#include "fsde/stats.hpp"

namespace fsde {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_int(const std::vector<std::int64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join_double(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::string join_str(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: value of '" + key + "' is not a number: " + v);
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config: value of '" + key + "' is not an integer: " + v);
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long i = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config: value of '" + key + "' is not a nonnegative integer: " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: value of '" + key + "' is not a boolean: " + v);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (model.empty()) throw ConfigError("config: model must not be empty");
  if (!(hurst > 0.0 && hurst < 1.0))
    throw ConfigError("config: hurst must lie in (0,1), got " + fmt(hurst));
  if (!(gamma > 0.0)) throw ConfigError("config: gamma must be positive, got " + fmt(gamma));
  if (steps < 1) throw ConfigError("config: steps must be at least 1");
  if (!(burn_in >= 0.0 && burn_in < 1.0))
    throw ConfigError("config: burn_in must lie in [0,1), got " + fmt(burn_in));
  if (thin < 1) throw ConfigError("config: thin must be at least 1");
  if (grid_points < 2) throw ConfigError("config: grid_points must be at least 2");
  if (grid_halfwidth < 0.0)
    throw ConfigError("config: grid_halfwidth must be nonnegative");
  if (jobs < 0) throw ConfigError("config: jobs must be nonnegative");
  if (out_dir.empty()) throw ConfigError("config: out_dir must not be empty");
  if (!(fou_lambda > 0.0)) throw ConfigError("config: fou_lambda must be positive");
  if (fou_sigma0 < 0.0) throw ConfigError("config: fou_sigma0 must be nonnegative");
  if (mem_cap < 1) throw ConfigError("config: mem_cap must be positive");
  if (!(bandwidth > 0.0))
    throw ConfigError("config: bandwidth must be positive, got " + fmt(bandwidth));
  if (!(tail_threshold > 0.0)) throw ConfigError("config: tail_threshold must be positive");
  if (!(theta > 0.0 && theta < 1.0))
    throw ConfigError("config: theta must lie in (0,1), got " + fmt(theta));
  if (!(delta > 0.0)) throw ConfigError("config: delta must be positive");
  if (!(pvar_p >= 1.0)) throw ConfigError("config: pvar_p must be at least 1");
  if (!(diag_horizon > 0.0)) throw ConfigError("config: diag_horizon must be positive");
  if (fgn_lags < 0) throw ConfigError("config: fgn_lags must be nonnegative");
  if (fgn_seeds < 2) throw ConfigError("config: fgn_seeds must be at least 2");
  for (std::int64_t s : steps_list)
    if (s < 1) throw ConfigError("config: steps_list entries must be at least 1");
  for (double h : hurst_list)
    if (!(h > 0.0 && h < 1.0))
      throw ConfigError("config: hurst_list entries must lie in (0,1)");
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write " + path);
  out << "[common]\n";
  out << "model = " << model << "\n";
  out << "hurst = " << fmt(hurst) << "\n";
  out << "gamma = " << fmt(gamma) << "\n";
  out << "steps = " << steps << "\n";
  out << "seed = " << seed << "\n";
  out << "burn_in = " << fmt(burn_in) << "\n";
  out << "thin = " << thin << "\n";
  out << "grid_points = " << grid_points << "\n";
  out << "grid_halfwidth = " << fmt(grid_halfwidth) << "\n";
  out << "jobs = " << jobs << "\n";
  out << "out_dir = " << out_dir << "\n";
  out << "x0 = " << fmt(x0) << "\n";
  out << "fou_lambda = " << fmt(fou_lambda) << "\n";
  out << "fou_sigma0 = " << fmt(fou_sigma0) << "\n";
  out << "mem_cap = " << mem_cap << "\n";
  out << "\n[simulate]\n";
  out << "dump_noise = " << (dump_noise ? "true" : "false") << "\n";
  out << "\n[density]\n";
  out << "bandwidth = " << fmt(bandwidth) << "\n";
  out << "kernel_stddev = " << (kernel_stddev ? "true" : "false") << "\n";
  out << "oracle = " << (with_oracle ? "true" : "false") << "\n";
  out << "\n[compare]\n";
  out << "steps_list = " << join_int(steps_list) << "\n";
  out << "hurst_list = " << join_double(hurst_list) << "\n";
  out << "tail_threshold = " << fmt(tail_threshold) << "\n";
  out << "\n[diagnose]\n";
  out << "functionals = " << join_str(functionals) << "\n";
  out << "theta = " << fmt(theta) << "\n";
  out << "delta = " << fmt(delta) << "\n";
  out << "pvar_p = " << fmt(pvar_p) << "\n";
  out << "diag_horizon = " << fmt(diag_horizon) << "\n";
  out << "\n[fgn-test]\n";
  out << "fgn_lags = " << fgn_lags << "\n";
  out << "fgn_seeds = " << fgn_seeds << "\n";
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  ExperimentConfig cfg;
  std::string line, section = "common";
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments and whitespace
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto l = line.find_first_not_of(" \t\r\n");
    if (l == std::string::npos) continue;
    auto r = line.find_last_not_of(" \t\r\n");
    line = line.substr(l, r - l + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: malformed section header at line " + std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const std::string qual = section + "." + key;

    if (qual == "common.model") cfg.model = val;
    else if (qual == "common.hurst") cfg.hurst = parse_double(qual, val);
    else if (qual == "common.gamma") cfg.gamma = parse_double(qual, val);
    else if (qual == "common.steps") cfg.steps = parse_int(qual, val);
    else if (qual == "common.seed") cfg.seed = parse_uint(qual, val);
    else if (qual == "common.burn_in") cfg.burn_in = parse_double(qual, val);
    else if (qual == "common.thin") cfg.thin = parse_int(qual, val);
    else if (qual == "common.grid_points") cfg.grid_points = parse_int(qual, val);
    else if (qual == "common.grid_halfwidth") cfg.grid_halfwidth = parse_double(qual, val);
    else if (qual == "common.jobs") cfg.jobs = static_cast<int>(parse_int(qual, val));
    else if (qual == "common.out_dir") cfg.out_dir = val;
    else if (qual == "common.x0") cfg.x0 = parse_double(qual, val);
    else if (qual == "common.fou_lambda") cfg.fou_lambda = parse_double(qual, val);
    else if (qual == "common.fou_sigma0") cfg.fou_sigma0 = parse_double(qual, val);
    else if (qual == "common.mem_cap") cfg.mem_cap = parse_int(qual, val);
    else if (qual == "simulate.dump_noise") cfg.dump_noise = parse_bool(qual, val);
    else if (qual == "density.bandwidth") cfg.bandwidth = parse_double(qual, val);
    else if (qual == "density.kernel_stddev") cfg.kernel_stddev = parse_bool(qual, val);
    else if (qual == "density.oracle") cfg.with_oracle = parse_bool(qual, val);
    else if (qual == "compare.steps_list") {
      cfg.steps_list.clear();
      for (const auto& tok : split_list(val)) cfg.steps_list.push_back(parse_int(qual, tok));
    } else if (qual == "compare.hurst_list") {
      cfg.hurst_list.clear();
      for (const auto& tok : split_list(val)) cfg.hurst_list.push_back(parse_double(qual, tok));
    } else if (qual == "compare.tail_threshold") cfg.tail_threshold = parse_double(qual, val);
    else if (qual == "diagnose.functionals") cfg.functionals = split_list(val);
    else if (qual == "diagnose.theta") cfg.theta = parse_double(qual, val);
    else if (qual == "diagnose.delta") cfg.delta = parse_double(qual, val);
    else if (qual == "diagnose.pvar_p") cfg.pvar_p = parse_double(qual, val);
    else if (qual == "diagnose.diag_horizon") cfg.diag_horizon = parse_double(qual, val);
    else if (qual == "fgn-test.fgn_lags") cfg.fgn_lags = parse_int(qual, val);
    else if (qual == "fgn-test.fgn_seeds") cfg.fgn_seeds = parse_int(qual, val);
    else throw ConfigError("config: unknown key '" + qual + "'");
  }
  return cfg;
}

ModelBundle ExperimentConfig::make_bundle() const {
  std::map<std::string, double> params;
  if (model == "fou") {
    params["lambda"] = fou_lambda;
    params["sigma0"] = fou_sigma0;
  }
  try {
    return make_model(model, params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

int ExperimentConfig::resolved_jobs() const { return resolve_jobs(jobs); }

Trajectory simulate_trajectory(const ModelBundle& bundle, const ExperimentConfig& cfg,
                               double hurst, std::int64_t steps, std::uint64_t seed,
                               bool keep_noise) {
  FgnEngine engine(hurst, cfg.gamma, steps, cfg.mem_cap);
  const FgnSequence noise = engine.generate(seed, bundle.model.dim_noise);
  EulerConfig ec;
  ec.gamma = cfg.gamma;
  ec.steps = steps;
  ec.initial_state = Eigen::VectorXd::Constant(bundle.model.dim_state, cfg.x0);
  ec.thin = cfg.thin;
  ec.keep_noise = keep_noise;
  return run_euler(bundle.model, ec, noise);
}

namespace {

json config_json(const ExperimentConfig& cfg) {
  json j;
  j["model"] = cfg.model;
  j["hurst"] = cfg.hurst;
  j["gamma"] = cfg.gamma;
  j["steps"] = cfg.steps;
  j["seed"] = cfg.seed;
  j["burn_in"] = cfg.burn_in;
  j["thin"] = cfg.thin;
  j["grid_points"] = cfg.grid_points;
  j["grid_halfwidth"] = cfg.grid_halfwidth;
  j["jobs"] = cfg.jobs;
  j["out_dir"] = cfg.out_dir;
  j["x0"] = cfg.x0;
  j["fou_lambda"] = cfg.fou_lambda;
  j["fou_sigma0"] = cfg.fou_sigma0;
  j["mem_cap"] = cfg.mem_cap;
  j["dump_noise"] = cfg.dump_noise;
  j["bandwidth"] = cfg.bandwidth;
  j["kernel_stddev"] = cfg.kernel_stddev;
  j["oracle"] = cfg.with_oracle;
  j["steps_list"] = cfg.steps_list;
  j["hurst_list"] = cfg.hurst_list;
  j["tail_threshold"] = cfg.tail_threshold;
  j["functionals"] = cfg.functionals;
  j["theta"] = cfg.theta;
  j["delta"] = cfg.delta;
  j["pvar_p"] = cfg.pvar_p;
  j["diag_horizon"] = cfg.diag_horizon;
  j["fgn_lags"] = cfg.fgn_lags;
  j["fgn_seeds"] = cfg.fgn_seeds;
  return j;
}

class ManifestWriter {
public:
  ManifestWriter(std::string command, const ExperimentConfig& cfg)
      : dir_(cfg.out_dir), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(dir_);
    manifest_["command"] = std::move(command);
    manifest_["library_version"] = kLibraryVersion;
    manifest_["config"] = config_json(cfg);
  }

  const std::string& dir() const { return dir_; }

  std::string path_of(const std::string& name) const {
    return (fs::path(dir_) / name).string();
  }

  void add_artifact(const std::string& name) { artifacts_.push_back(name); }

  json& results() { return manifest_["results"]; }

  // Writes manifest.json and returns the artifact list (manifest last).
  std::vector<std::string> finish() {
    json files = json::array();
    for (const auto& name : artifacts_) {
      json f;
      f["file"] = name;
      f["sha256"] = Sha256::of_file(path_of(name));
      files.push_back(f);
    }
    manifest_["artifacts"] = files;
    manifest_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    {
      std::ofstream out(path_of("manifest.json"));
      out << manifest_.dump(2) << "\n";
    }
    std::vector<std::string> written;
    for (const auto& name : artifacts_) written.push_back(path_of(name));
    written.push_back(path_of("manifest.json"));
    return written;
  }

private:
  std::string dir_;
  std::chrono::steady_clock::time_point start_;
  json manifest_;
  std::vector<std::string> artifacts_;
};

// Marginal states (d = 1) after discarding the burn-in prefix; the final
// grid state is excluded so the measure has exactly `n` atoms at indices
// 0..n-1 of the stored grid.
Eigen::VectorXd marginal_states_1d(const Trajectory& traj, double burn_in) {
  if (traj.dim() != 1)
    throw ConfigError("config: density pipelines need a one-dimensional model");
  const Eigen::Index total = traj.stored_count() - 1;
  const Eigen::Index skip =
      static_cast<Eigen::Index>(std::floor(burn_in * static_cast<double>(total)));
  const Eigen::Index n = total - skip;
  if (n < 1) throw ConfigError("config: burn_in leaves no states");
  return traj.grid_values.row(0).segment(skip, n).transpose();
}

std::map<std::string, std::string> density_provenance(const ExperimentConfig& cfg,
                                                      std::int64_t steps, double hurst,
                                                      const std::string& kind) {
  std::map<std::string, std::string> p;
  p["model"] = cfg.model;
  p["H"] = fmt(hurst);
  p["gamma"] = fmt(cfg.gamma);
  p["n"] = std::to_string(steps);
  p["h"] = kind == "oracle" ? std::string("oracle") : fmt(cfg.bandwidth);
  p["normalized"] = "unit-mass";
  return p;
}

}  // namespace

std::vector<std::string> run_simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelBundle bundle = cfg.make_bundle();
  ManifestWriter mw("simulate", cfg);
  const bool keep_noise = cfg.dump_noise || cfg.steps <= 2'000'000;
  const Trajectory traj =
      simulate_trajectory(bundle, cfg, cfg.hurst, cfg.steps, cfg.seed, keep_noise);
  {
    std::ofstream out(mw.path_of("trajectory.csv"));
    write_trajectory_csv(traj, out);
  }
  mw.add_artifact("trajectory.csv");
  if (cfg.dump_noise) {
    std::ofstream out(mw.path_of("noise.csv"));
    write_fgn_csv(*traj.noise, out);
    mw.add_artifact("noise.csv");
  }
  mw.results()["final_state"] = traj.grid_values.col(traj.stored_count() - 1)(0);
  return mw.finish();
}

std::vector<std::string> run_density(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelBundle bundle = cfg.make_bundle();
  if (cfg.with_oracle && cfg.hurst != 0.5)
    throw ConfigError("config: --oracle requires hurst = 0.5");
  if (bundle.model.dim_state != 1)
    throw ConfigError("config: density requires a one-dimensional model");
  ManifestWriter mw("density", cfg);

  const Trajectory traj =
      simulate_trajectory(bundle, cfg, cfg.hurst, cfg.steps, cfg.seed, false);
  const Eigen::VectorXd states = marginal_states_1d(traj, cfg.burn_in);

  Eigen::ArrayXd grid;
  if (cfg.grid_halfwidth > 0.0)
    grid = uniform_grid(cfg.grid_halfwidth, cfg.grid_points);
  else if (cfg.with_oracle)
    grid = default_oracle_grid(bundle.model, cfg.grid_points);
  else
    grid = default_kde_grid(states, cfg.grid_points);

  KernelSpec kernel{cfg.bandwidth, cfg.kernel_stddev ? KernelSpec::Mode::kStdDev
                                                     : KernelSpec::Mode::kVarianceLike};
  const DensityEstimate est =
      kde(states, kernel, grid, cfg.resolved_jobs()).normalized();
  {
    std::ofstream out(mw.path_of("density.csv"));
    write_density_csv(est, out, density_provenance(cfg, cfg.steps, cfg.hurst, "kde"));
  }
  mw.add_artifact("density.csv");
  mw.results()["kde_grid_mass"] = est.normalization;
  mw.results()["atoms"] = states.size();

  if (cfg.with_oracle) {
    const DensityEstimate oracle = oracle_density_h_half(bundle.model, grid);
    {
      std::ofstream out(mw.path_of("oracle.csv"));
      write_density_csv(oracle, out, density_provenance(cfg, cfg.steps, cfg.hurst, "oracle"));
    }
    mw.add_artifact("oracle.csv");
    mw.results()["l1_to_oracle"] = l1_distance(est, oracle);
    mw.results()["linf_to_oracle"] = linf_distance(est, oracle);
  }
  return mw.finish();
}

std::vector<std::string> run_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelBundle bundle = cfg.make_bundle();
  if (bundle.model.dim_state != 1)
    throw ConfigError("config: compare requires a one-dimensional model");
  if (!cfg.steps_list.empty() && !cfg.hurst_list.empty())
    throw ConfigError("config: give steps_list or hurst_list, not both");

  struct Cell {
    std::string label;
    double hurst;
    std::int64_t steps;
  };
  std::vector<Cell> cells;
  if (!cfg.steps_list.empty()) {
    for (std::int64_t s : cfg.steps_list)
      cells.push_back({"n=" + std::to_string(s), cfg.hurst, s});
  } else {
    for (double h : cfg.hurst_list) cells.push_back({"H=" + fmt(h), h, cfg.steps});
  }
  if (cells.size() < 2) throw ConfigError("config: compare needs at least 2 cells");

  ManifestWriter mw("compare", cfg);

  // Phase 1: marginal states per cell, sweep cells running concurrently.
  std::vector<Eigen::VectorXd> states(cells.size());
  {
    const int jobs = cfg.resolved_jobs();
    std::size_t next = 0;
    while (next < cells.size()) {
      const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(jobs),
                                                      cells.size() - next);
      std::vector<std::future<Eigen::VectorXd>> futs;
      for (std::size_t i = 0; i < batch; ++i) {
        const Cell cell = cells[next + i];
        futs.push_back(std::async(std::launch::async, [&, cell] {
          const Trajectory traj =
              simulate_trajectory(bundle, cfg, cell.hurst, cell.steps, cfg.seed, false);
          return marginal_states_1d(traj, cfg.burn_in);
        }));
      }
      for (std::size_t i = 0; i < batch; ++i) states[next + i] = futs[i].get();
      next += batch;
    }
  }

  // Phase 2: densities on one shared grid wide enough for every cell.
  Eigen::ArrayXd grid;
  if (cfg.grid_halfwidth > 0.0) {
    grid = uniform_grid(cfg.grid_halfwidth, cfg.grid_points);
  } else {
    double half = 0.0;
    for (const auto& s : states) {
      const Eigen::ArrayXd g = default_kde_grid(s, 3);
      half = std::max(half, -g[0]);
    }
    grid = uniform_grid(half, cfg.grid_points);
  }
  KernelSpec kernel{cfg.bandwidth, cfg.kernel_stddev ? KernelSpec::Mode::kStdDev
                                                     : KernelSpec::Mode::kVarianceLike};
  std::vector<DensityEstimate> dens;
  for (std::size_t i = 0; i < cells.size(); ++i)
    dens.push_back(kde(states[i], kernel, grid, cfg.resolved_jobs()).normalized());

  {
    std::ofstream out(mw.path_of("densities.csv"));
    out << "# compare model=" << cfg.model << " gamma=" << fmt(cfg.gamma)
        << " h=" << fmt(cfg.bandwidth) << " seed=" << cfg.seed << "\n";
    out << "x";
    for (const auto& c : cells) out << ',' << c.label;
    out << "\n";
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      out << fmt(grid[i]);
      for (const auto& d : dens) out << ',' << fmt(d.values[i]);
      out << "\n";
    }
  }
  mw.add_artifact("densities.csv");

  auto write_matrix = [&](const std::string& name, auto metric) {
    std::ofstream out(mw.path_of(name));
    out << "cell";
    for (const auto& c : cells) out << ',' << c.label;
    out << "\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out << cells[i].label;
      for (std::size_t j = 0; j < cells.size(); ++j)
        out << ',' << fmt(metric(dens[i], dens[j]));
      out << "\n";
    }
  };
  write_matrix("distances_l1.csv",
               [](const DensityEstimate& a, const DensityEstimate& b) {
                 return l1_distance(a, b);
               });
  write_matrix("distances_linf.csv",
               [](const DensityEstimate& a, const DensityEstimate& b) {
                 return linf_distance(a, b);
               });
  mw.add_artifact("distances_l1.csv");
  mw.add_artifact("distances_linf.csv");

  json tails = json::object();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Eigen::VectorXd& s = states[i];
    Eigen::Index cnt = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
      if (std::abs(s[k]) > cfg.tail_threshold) ++cnt;
    tails[cells[i].label] = static_cast<double>(cnt) / static_cast<double>(s.size());
  }
  mw.results()["tail_mass"] = tails;
  mw.results()["tail_threshold"] = cfg.tail_threshold;
  return mw.finish();
}

namespace {

struct DiagRow {
  std::string functional;
  std::string params;
  double value;
  double batch_se;  // NaN when not applicable
};

}  // namespace

std::vector<std::string> run_diagnose(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelBundle bundle = cfg.make_bundle();
  ManifestWriter mw("diagnose", cfg);

  auto wanted = [&](const std::string& name) {
    if (cfg.functionals.empty()) return true;
    for (const auto& f : cfg.functionals)
      if (f == name) return true;
    return false;
  };

  const Trajectory traj =
      simulate_trajectory(bundle, cfg, cfg.hurst, cfg.steps, cfg.seed, false);
  std::vector<DiagRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double horizon = std::min(cfg.diag_horizon, traj.horizon());

  if (wanted("holder") || wanted("modulus") || wanted("pvar") || wanted("qgamma")) {
    // Path functionals run on the prefix [0, horizon] (p-variation is capped
    // at 1e4 samples by contract).
    const Eigen::Index count = std::min<Eigen::Index>(
        traj.stored_count(),
        static_cast<Eigen::Index>(std::floor(horizon / traj.gamma * (1.0 + 1e-12))) + 1);
    SampledPath path =
        make_uniform_path(0.0, traj.gamma, traj.grid_values.leftCols(count));
    std::ostringstream iv;
    iv << "theta=" << cfg.theta << " interval=[0," << fmt(traj.gamma * (count - 1)) << "]";
    if (wanted("holder")) {
      const HolderReport rep =
          holder_seminorm(path, cfg.theta, 0.0, traj.gamma * (count - 1));
      rows.push_back({"holder_seminorm", iv.str(), rep.seminorm, nan});
    }
    if (wanted("modulus")) {
      const double v =
          holder_modulus(path, cfg.theta, traj.gamma * (count - 1), cfg.delta);
      rows.push_back({"holder_modulus", iv.str() + " delta=" + fmt(cfg.delta), v, nan});
    }
    if (wanted("pvar")) {
      const Eigen::Index pcount = std::min<Eigen::Index>(count, 10'001);
      const double v = p_variation(path, cfg.pvar_p, 0.0, traj.gamma * (pcount - 1));
      rows.push_back({"p_variation",
                      "p=" + fmt(cfg.pvar_p) + " interval=[0," +
                          fmt(traj.gamma * (pcount - 1)) + "]",
                      v, nan});
    }
    if (wanted("qgamma")) {
      const double v = quadratic_functional(path, traj.gamma * (count - 1));
      rows.push_back({"quadratic_functional",
                      "gamma=" + fmt(traj.gamma) + " T=" + fmt(traj.gamma * (count - 1)),
                      v, nan});
    }
  }

  if (wanted("lyapunov")) {
    const Eigen::Index total = traj.stored_count() - 1;
    std::vector<Eigen::Index> checkpoints;
    for (int i = 1; i <= 10; ++i)
      checkpoints.push_back(std::max<Eigen::Index>(1, total * i / 10));
    const TimeAverageSeries series =
        lyapunov_average(traj, bundle.lyapunov, 1.0, checkpoints, 0, cfg.resolved_jobs());
    {
      std::ofstream out(mw.path_of("lyapunov_series.csv"));
      write_series_csv(series, out);
    }
    mw.add_artifact("lyapunov_series.csv");
    const Eigen::Index last = series.partial_averages.size() - 1;
    rows.push_back({"lyapunov_average", "p=1 n=" + std::to_string(total),
                    series.partial_averages[last], series.batch_se[last]});
  }

  if (wanted("young-rate")) {
    // gamma-ladder slope of the discretization error on [0,1], averaged over
    // replicate seeds.
    const int ladder_seeds = 20;
    const Eigen::Index fine_pow = 13;
    Eigen::VectorXd slopes(ladder_seeds);
    FgnEngine engine(cfg.hurst, std::ldexp(1.0, -static_cast<int>(fine_pow)),
                     Eigen::Index(1) << fine_pow, cfg.mem_cap);
    for (int r = 0; r < ladder_seeds; ++r) {
      const FgnSequence fine =
          engine.generate(sub_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(r)),
                          bundle.model.dim_noise);
      std::vector<double> lg, le;
      for (int p = 4; p <= 9; ++p) {
        const Eigen::Index agg = Eigen::Index(1) << (fine_pow - p);
        const FgnSequence coarse_noise = aggregate_increments(fine, agg);
        const FgnSequence ref_noise =
            (agg / 16 >= 1) ? aggregate_increments(fine, agg / 16) : fine;
        EulerConfig ce;
        ce.gamma = std::ldexp(1.0, -p);
        ce.steps = Eigen::Index(1) << p;
        ce.initial_state = Eigen::VectorXd::Constant(bundle.model.dim_state, cfg.x0);
        ce.keep_noise = false;
        const Trajectory coarse = run_euler(bundle.model, ce, coarse_noise);
        EulerConfig fe = ce;
        fe.gamma = ce.gamma / 16.0;
        fe.steps = ce.steps * 16;
        const Trajectory ref = run_euler(bundle.model, fe, ref_noise);
        double err = 0.0;
        for (Eigen::Index k = 0; k <= ce.steps; ++k)
          err = std::max(err,
                         (coarse.grid_values.col(k) - ref.grid_values.col(16 * k)).norm());
        lg.push_back(std::log(ce.gamma));
        le.push_back(std::log(std::max(err, 1e-300)));
      }
      slopes[r] = regression_slope(
          Eigen::Map<const Eigen::VectorXd>(lg.data(), static_cast<Eigen::Index>(lg.size())),
          Eigen::Map<const Eigen::VectorXd>(le.data(), static_cast<Eigen::Index>(le.size())));
    }
    const double mean = slopes.mean();
    const double se = std::sqrt((slopes.array() - mean).square().sum() /
                                static_cast<double>(ladder_seeds - 1) /
                                static_cast<double>(ladder_seeds));
    rows.push_back(
        {"young_rate_slope", "gamma=2^-4..2^-9 seeds=" + std::to_string(ladder_seeds), mean,
         se});
  }

  if (wanted("tail")) {
    const MarginalOccupation marg = marginal_occupation(traj, traj.stored_count() - 1, 0);
    rows.push_back({"tail_mass", "threshold=" + fmt(cfg.tail_threshold),
                    tail_mass(marg, cfg.tail_threshold), nan});
  }

  {
    std::ofstream out(mw.path_of("diagnostics.csv"));
    out << "# diagnose model=" << cfg.model << " H=" << fmt(cfg.hurst)
        << " gamma=" << fmt(cfg.gamma) << " steps=" << cfg.steps << " seed=" << cfg.seed
        << "\n";
    out << "functional,params,value,batch_se\n";
    for (const auto& r : rows)
      out << r.functional << ",\"" << r.params << "\"," << fmt(r.value) << ','
          << fmt(r.batch_se) << "\n";
  }
  mw.add_artifact("diagnostics.csv");
  return mw.finish();
}

std::vector<std::string> run_fgn_test(const ExperimentConfig& cfg) {
  cfg.validate();
  ManifestWriter mw("fgn-test", cfg);
  const Eigen::Index lags = cfg.fgn_lags;
  const Eigen::Index nseeds = cfg.fgn_seeds;
  const Eigen::Index count = cfg.steps;
  if (count <= 2 * lags)
    throw ConfigError("config: steps must exceed twice fgn_lags");

  FgnEngine engine(cfg.hurst, cfg.gamma, count, cfg.mem_cap);
  Eigen::MatrixXd acf(nseeds, lags + 1);
  for (Eigen::Index s = 0; s < nseeds; ++s) {
    const auto pair =
        engine.generate_pair(sub_seed(cfg.seed, static_cast<std::uint64_t>(s)));
    const Eigen::VectorXd& x = pair.first;
    for (Eigen::Index k = 0; k <= lags; ++k) {
      // fGn is centered by construction, so no mean subtraction.
      double dot = 0.0;
      for (Eigen::Index i = 0; i + k < count; ++i) dot += x[i] * x[i + k];
      acf(s, k) = dot / static_cast<double>(count - k);
    }
  }

  {
    std::ofstream out(mw.path_of("fgn_acf.csv"));
    out << "# fgn-test H=" << fmt(cfg.hurst) << " gamma=" << fmt(cfg.gamma)
        << " n=" << count << " seeds=" << nseeds << " seed=" << cfg.seed << "\n";
    out << "lag,analytic,empirical,z_score\n";
    for (Eigen::Index k = 0; k <= lags; ++k) {
      const double analytic = fgn_autocovariance(cfg.hurst, cfg.gamma, k);
      const double mean = acf.col(k).mean();
      const double sd = std::sqrt((acf.col(k).array() - mean).square().sum() /
                                  static_cast<double>(nseeds - 1));
      const double se = sd / std::sqrt(static_cast<double>(nseeds));
      const double z = se > 0.0 ? (mean - analytic) / se : 0.0;
      out << k << ',' << fmt(analytic) << ',' << fmt(mean) << ',' << fmt(z) << "\n";
    }
  }
  mw.add_artifact("fgn_acf.csv");
  return mw.finish();
}

}  // namespace fsde
