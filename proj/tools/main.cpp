#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fsde/errors.hpp"
#include "fsde/experiment.hpp"

namespace {

// Every flag is tri-state so a config file can supply defaults and explicit
// flags override it.
struct Options {
  std::optional<std::string> config_file;
  std::optional<std::string> model;
  std::optional<double> hurst, gamma, burn_in, grid_halfwidth, x0;
  std::optional<double> fou_lambda, fou_sigma0, bandwidth, tail_threshold;
  std::optional<double> theta, delta, pvar_p, diag_horizon;
  std::optional<std::int64_t> steps, thin, grid_points, mem_cap, fgn_lags, fgn_seeds;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
  std::optional<bool> dump_noise, kernel_stddev, with_oracle;
  std::optional<std::vector<std::int64_t>> steps_list;
  std::optional<std::vector<double>> hurst_list;
  std::optional<std::vector<std::string>> functionals;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_file, "config file (flags override it)");
  sub->add_option("--model", o.model, "model name (toy, fou, ...)");
  sub->add_option("--hurst", o.hurst, "Hurst parameter in (0,1)");
  sub->add_option("--gamma", o.gamma, "Euler step");
  sub->add_option("--steps", o.steps, "number of Euler steps n");
  sub->add_option("--seed", o.seed, "base seed");
  sub->add_option("--bandwidth", o.bandwidth, "kernel bandwidth h");
  sub->add_option("--burn-in", o.burn_in, "burn-in fraction in [0,1)");
  sub->add_option("--thin", o.thin, "keep every j-th grid state");
  sub->add_option("--grid-points", o.grid_points, "density grid points");
  sub->add_option("--grid-halfwidth", o.grid_halfwidth, "density grid half width (0 = auto)");
  sub->add_option("--jobs", o.jobs, "worker bound (0 = hardware)");
  sub->add_option("--out-dir", o.out_dir, "output directory");
  sub->add_option("--x0", o.x0, "initial state (broadcast)");
  sub->add_option("--fou-lambda", o.fou_lambda, "fou model: mean reversion");
  sub->add_option("--fou-sigma0", o.fou_sigma0, "fou model: diffusion constant");
  sub->add_option("--mem-cap", o.mem_cap, "noise generator cap, in increments");
}

fsde::ExperimentConfig resolve(const Options& o) {
  fsde::ExperimentConfig cfg;
  if (o.config_file) cfg = fsde::ExperimentConfig::load(*o.config_file);
  if (o.model) cfg.model = *o.model;
  if (o.hurst) cfg.hurst = *o.hurst;
  if (o.gamma) cfg.gamma = *o.gamma;
  if (o.steps) cfg.steps = *o.steps;
  if (o.seed) cfg.seed = *o.seed;
  if (o.burn_in) cfg.burn_in = *o.burn_in;
  if (o.thin) cfg.thin = *o.thin;
  if (o.grid_points) cfg.grid_points = *o.grid_points;
  if (o.grid_halfwidth) cfg.grid_halfwidth = *o.grid_halfwidth;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.x0) cfg.x0 = *o.x0;
  if (o.fou_lambda) cfg.fou_lambda = *o.fou_lambda;
  if (o.fou_sigma0) cfg.fou_sigma0 = *o.fou_sigma0;
  if (o.mem_cap) cfg.mem_cap = *o.mem_cap;
  if (o.dump_noise) cfg.dump_noise = *o.dump_noise;
  if (o.bandwidth) cfg.bandwidth = *o.bandwidth;
  if (o.kernel_stddev) cfg.kernel_stddev = *o.kernel_stddev;
  if (o.with_oracle) cfg.with_oracle = *o.with_oracle;
  if (o.steps_list) cfg.steps_list = *o.steps_list;
  if (o.hurst_list) cfg.hurst_list = *o.hurst_list;
  if (o.tail_threshold) cfg.tail_threshold = *o.tail_threshold;
  if (o.functionals) cfg.functionals = *o.functionals;
  if (o.theta) cfg.theta = *o.theta;
  if (o.delta) cfg.delta = *o.delta;
  if (o.pvar_p) cfg.pvar_p = *o.pvar_p;
  if (o.diag_horizon) cfg.diag_horizon = *o.diag_horizon;
  if (o.fgn_lags) cfg.fgn_lags = *o.fgn_lags;
  if (o.fgn_seeds) cfg.fgn_seeds = *o.fgn_seeds;
  return cfg;
}

int fail(const char* category, const std::string& message, int code) {
  std::cerr << "{\"error\":\"" << category << "\",\"message\":\"";
  for (char c : message) {
    if (c == '"' || c == '\\') std::cerr << '\\';
    std::cerr << c;
  }
  std::cerr << "\"}\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fsde: stationary-regime approximation for SDEs driven by fractional "
               "Brownian motion (H > 1/2)"};
  app.set_version_flag("--version", std::string(fsde::kLibraryVersion));
  app.require_subcommand(1);

  Options o;
  auto* simulate = app.add_subcommand("simulate", "run the Euler scheme, export the trajectory");
  add_common(simulate, o);
  simulate->add_flag("--dump-noise", [&o](std::int64_t) { o.dump_noise = true; },
                     "also export the driving fGn increments");

  auto* density = app.add_subcommand("density", "kernel density of the marginal occupation measure");
  add_common(density, o);
  density->add_flag("--kernel-stddev", [&o](std::int64_t) { o.kernel_stddev = true; },
                    "read h as a standard deviation instead of the verbatim variance-like form");
  density->add_flag("--oracle", [&o](std::int64_t) { o.with_oracle = true; },
                    "also emit the H=1/2 quadrature density (requires hurst=0.5)");

  auto* compare = app.add_subcommand("compare", "densities across an n- or H-sweep");
  add_common(compare, o);
  compare->add_option("--steps-list", o.steps_list, "sweep over n")->delimiter(',');
  compare->add_option("--hurst-list", o.hurst_list, "sweep over H")->delimiter(',');
  compare->add_option("--tail-threshold", o.tail_threshold, "|x| threshold for tail mass");

  auto* diagnose = app.add_subcommand("diagnose", "path-regularity and stability diagnostics");
  add_common(diagnose, o);
  diagnose->add_option("--functionals", o.functionals,
                       "subset of holder,modulus,pvar,qgamma,lyapunov,young-rate,tail")
      ->delimiter(',');
  diagnose->add_option("--theta", o.theta, "Holder exponent");
  diagnose->add_option("--delta", o.delta, "modulus window");
  diagnose->add_option("--pvar-p", o.pvar_p, "p for the p-variation");
  diagnose->add_option("--diag-horizon", o.diag_horizon, "interval for path functionals");

  auto* fgntest = app.add_subcommand("fgn-test", "autocovariance check of the noise generator");
  add_common(fgntest, o);
  fgntest->add_option("--lags", o.fgn_lags, "max lag");
  fgntest->add_option("--seeds", o.fgn_seeds, "replicate seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("config", e.what(), 2);
  }

  try {
    const fsde::ExperimentConfig cfg = resolve(o);
    std::vector<std::string> files;
    if (simulate->parsed()) files = fsde::run_simulate(cfg);
    else if (density->parsed()) files = fsde::run_density(cfg);
    else if (compare->parsed()) files = fsde::run_compare(cfg);
    else if (diagnose->parsed()) files = fsde::run_diagnose(cfg);
    else if (fgntest->parsed()) files = fsde::run_fgn_test(cfg);
    for (const auto& f : files) std::cout << f << "\n";
    return 0;
  } catch (const fsde::ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const fsde::ResourceError& e) {
    return fail("resource", e.what(), 3);
  } catch (const fsde::NumericalError& e) {
    return fail("numerical", e.what(), 4);
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
