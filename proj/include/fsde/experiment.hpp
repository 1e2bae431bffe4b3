#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsde/euler.hpp"
#include "fsde/model.hpp"

namespace fsde {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Batch experiment configuration shared by the CLI subcommands. Values
// round-trip losslessly through the flat key-value config file (doubles are
// written with 17 significant digits).
struct ExperimentConfig {
  // [common]
  std::string model = "toy";
  double hurst = 0.75;
  double gamma = 0.05;
  std::int64_t steps = 100000;
  std::uint64_t seed = 1;
  double burn_in = 0.1;  // fraction of the run discarded before statistics
  std::int64_t thin = 1;
  std::int64_t grid_points = 1025;
  double grid_halfwidth = 0.0;  // 0 = automatic
  int jobs = 0;                 // 0 = hardware concurrency
  std::string out_dir = ".";
  double x0 = 0.0;
  double fou_lambda = 1.0;
  double fou_sigma0 = 1.0;
  std::int64_t mem_cap = 20000000;  // increments the noise generator may hold

  // [simulate]
  bool dump_noise = false;

  // [density]
  double bandwidth = 0.2;
  bool kernel_stddev = false;  // read bandwidth as a standard deviation
  bool with_oracle = false;

  // [compare]
  std::vector<std::int64_t> steps_list;
  std::vector<double> hurst_list;
  double tail_threshold = 8.0;

  // [diagnose]
  std::vector<std::string> functionals;  // empty = all
  double theta = 0.6;
  double delta = 0.25;
  double pvar_p = 2.0;
  double diag_horizon = 1.0;  // interval for path functionals

  // [fgn-test]
  std::int64_t fgn_lags = 20;
  std::int64_t fgn_seeds = 30;

  bool operator==(const ExperimentConfig&) const = default;

  // Throws ConfigError naming the offending field.
  void validate() const;

  void save(const std::string& path) const;
  static ExperimentConfig load(const std::string& path);

  ModelBundle make_bundle() const;
  int resolved_jobs() const;
};

// Subcommand drivers. Each validates the config, runs the pipeline, writes
// its artifacts plus manifest.json under cfg.out_dir, and returns the list
// of files written (manifest last).
std::vector<std::string> run_simulate(const ExperimentConfig& cfg);
std::vector<std::string> run_density(const ExperimentConfig& cfg);
std::vector<std::string> run_compare(const ExperimentConfig& cfg);
std::vector<std::string> run_diagnose(const ExperimentConfig& cfg);
std::vector<std::string> run_fgn_test(const ExperimentConfig& cfg);

// Shared helper: exact noise + Euler run for the configured model.
Trajectory simulate_trajectory(const ModelBundle& bundle, const ExperimentConfig& cfg,
                               double hurst, std::int64_t steps, std::uint64_t seed,
                               bool keep_noise);

}  // namespace fsde
