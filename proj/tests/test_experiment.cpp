#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fsde/errors.hpp"
#include "fsde/experiment.hpp"
#include "fsde/sha256.hpp"

using namespace fsde;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("fsde_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

json read_manifest(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  REQUIRE(in.good());
  json j;
  in >> j;
  return j;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  ExperimentConfig cfg;
  cfg.hurst = 1.5;
  CHECK_THROWS_WITH_AS(cfg.validate(),
                       doctest::Contains("hurst"), ConfigError);
  cfg = {};
  cfg.gamma = -0.1;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("gamma"), ConfigError);
  cfg = {};
  cfg.steps = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("steps"), ConfigError);
  cfg = {};
  cfg.burn_in = 1.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("burn_in"), ConfigError);
  cfg = {};
  cfg.bandwidth = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("bandwidth"), ConfigError);
  cfg = {};
  cfg.hurst_list = {0.5, 1.2};
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("hurst_list"), ConfigError);
}

TEST_CASE("config round-trips losslessly through its file format") {
  TempDir tmp("roundtrip");
  ExperimentConfig cfg;
  cfg.model = "fou";
  cfg.hurst = 0.6180339887498949;
  cfg.gamma = 1.0 / 3.0;
  cfg.steps = 123457;
  cfg.seed = 18446744073709551615ULL;
  cfg.burn_in = 0.0625;
  cfg.thin = 7;
  cfg.grid_points = 513;
  cfg.grid_halfwidth = 17.25;
  cfg.jobs = 3;
  cfg.out_dir = "results/run_1";
  cfg.x0 = -2.5e-3;
  cfg.fou_lambda = 2.25;
  cfg.fou_sigma0 = 0.875;
  cfg.mem_cap = 1048576;
  cfg.dump_noise = true;
  cfg.bandwidth = 0.15000000000000002;
  cfg.kernel_stddev = true;
  cfg.with_oracle = true;
  cfg.steps_list = {100000, 1000000, 10000000};
  cfg.hurst_list = {};
  cfg.tail_threshold = 8.0;
  cfg.functionals = {"holder", "young-rate"};
  cfg.theta = 0.55;
  cfg.delta = 0.125;
  cfg.pvar_p = 2.5;
  cfg.diag_horizon = 2.0;
  cfg.fgn_lags = 15;
  cfg.fgn_seeds = 40;

  const std::string file = tmp.sub("cfg.ini");
  cfg.save(file);
  const ExperimentConfig back = ExperimentConfig::load(file);
  CHECK(back == cfg);
}

TEST_CASE("config file parsing errors") {
  TempDir tmp("badcfg");
  auto write = [&](const std::string& text) {
    std::ofstream out(tmp.sub("bad.ini"));
    out << text;
  };
  write("[common]\nnosuchkey = 3\n");
  CHECK_THROWS_WITH_AS(ExperimentConfig::load(tmp.sub("bad.ini")),
                       doctest::Contains("unknown key"), ConfigError);
  write("[common\nhurst = 0.5\n");
  CHECK_THROWS_AS(ExperimentConfig::load(tmp.sub("bad.ini")), ConfigError);
  write("[common]\nhurst equals 0.5\n");
  CHECK_THROWS_AS(ExperimentConfig::load(tmp.sub("bad.ini")), ConfigError);
  write("[common]\nhurst = zero point five\n");
  CHECK_THROWS_AS(ExperimentConfig::load(tmp.sub("bad.ini")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(tmp.sub("missing.ini")), ConfigError);
  // comments and blank lines are fine
  write("# a comment\n\n[common]\nhurst = 0.6  # trailing\n");
  CHECK(ExperimentConfig::load(tmp.sub("bad.ini")).hurst == 0.6);
}

TEST_CASE("simulate pipeline: determinism and closed-form decay") {
  TempDir tmp("simulate");

  SUBCASE("two runs with the same config produce identical digests") {
    ExperimentConfig cfg;
    cfg.steps = 1000;
    cfg.gamma = 0.05;
    cfg.seed = 42;
    cfg.out_dir = tmp.sub("a");
    run_simulate(cfg);
    cfg.out_dir = tmp.sub("b");
    run_simulate(cfg);
    CHECK(Sha256::of_file(tmp.sub("a") + "/trajectory.csv") ==
          Sha256::of_file(tmp.sub("b") + "/trajectory.csv"));
    const json ma = read_manifest(tmp.sub("a"));
    CHECK(ma["artifacts"][0]["sha256"] ==
          Sha256::of_file(tmp.sub("a") + "/trajectory.csv"));
    CHECK(ma["library_version"] == kLibraryVersion);
  }

  SUBCASE("sigma = 0 drift decay matches the closed form") {
    ExperimentConfig cfg;
    cfg.model = "fou";
    cfg.fou_lambda = 1.0;
    cfg.fou_sigma0 = 0.0;
    cfg.x0 = 1.0;
    cfg.gamma = 0.1;
    cfg.steps = 50;
    cfg.out_dir = tmp.sub("decay");
    run_simulate(cfg);
    const json m = read_manifest(tmp.sub("decay"));
    CHECK(m["results"]["final_state"].get<double>() ==
          doctest::Approx(std::pow(0.9, 50)).epsilon(1e-12));
  }

  SUBCASE("invalid hurst fails before writing anything") {
    ExperimentConfig cfg;
    cfg.hurst = 1.5;
    cfg.out_dir = tmp.sub("never");
    CHECK_THROWS_AS(run_simulate(cfg), ConfigError);
    CHECK_FALSE(fs::exists(tmp.sub("never")));
  }

  SUBCASE("noise dump has the fgn header") {
    ExperimentConfig cfg;
    cfg.steps = 16;
    cfg.gamma = 0.25;
    cfg.hurst = 0.7;
    cfg.seed = 5;
    cfg.dump_noise = true;
    cfg.out_dir = tmp.sub("noise");
    run_simulate(cfg);
    std::ifstream in(tmp.sub("noise") + "/noise.csv");
    std::string first;
    std::getline(in, first);
    CHECK(first == "# fgn H=0.7 gamma=0.25 n=16 seed=5");
  }
}

TEST_CASE("density pipeline") {
  TempDir tmp("density");

  SUBCASE("tiny n is valid, just noisy") {
    ExperimentConfig cfg;
    cfg.steps = 10;
    cfg.gamma = 0.05;
    cfg.burn_in = 0.0;
    cfg.out_dir = tmp.sub("tiny");
    const auto files = run_density(cfg);
    CHECK(fs::exists(files[0]));
    const json m = read_manifest(tmp.sub("tiny"));
    CHECK(m["results"]["atoms"] == 10);
  }

  SUBCASE("oracle demands hurst = 0.5") {
    ExperimentConfig cfg;
    cfg.with_oracle = true;
    cfg.hurst = 0.75;
    cfg.out_dir = tmp.sub("bad");
    CHECK_THROWS_WITH_AS(run_density(cfg), doctest::Contains("oracle"), ConfigError);
  }

  SUBCASE("oracle comparison lands in the manifest") {
    ExperimentConfig cfg;
    cfg.hurst = 0.5;
    cfg.gamma = 0.02;
    cfg.steps = 20000;
    cfg.bandwidth = 0.15;
    cfg.with_oracle = true;
    cfg.seed = 11;
    cfg.out_dir = tmp.sub("oracle");
    run_density(cfg);
    const json m = read_manifest(tmp.sub("oracle"));
    CHECK(m["results"]["l1_to_oracle"].get<double>() < 0.5);
    CHECK(m["results"]["linf_to_oracle"].get<double>() > 0.0);
    CHECK(fs::exists(tmp.sub("oracle") + "/oracle.csv"));
  }
}

TEST_CASE("compare pipeline") {
  TempDir tmp("compare");

  SUBCASE("identical cells with the same seed have zero distance") {
    ExperimentConfig cfg;
    cfg.steps_list = {800, 800};
    cfg.gamma = 0.05;
    cfg.seed = 9;
    cfg.grid_halfwidth = 12.0;
    cfg.out_dir = tmp.sub("same");
    run_compare(cfg);
    std::ifstream in(tmp.sub("same") + "/distances_linf.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    // row: label,0,offdiag; identical cells so offdiag is exactly 0
    const auto last = row.rfind(',');
    CHECK(std::stod(row.substr(last + 1)) == 0.0);
  }

  SUBCASE("H sweep records tail masses") {
    ExperimentConfig cfg;
    cfg.hurst_list = {0.5, 0.75};
    cfg.steps = 5000;
    cfg.gamma = 0.05;
    cfg.out_dir = tmp.sub("hsweep");
    run_compare(cfg);
    const json m = read_manifest(tmp.sub("hsweep"));
    CHECK(m["results"]["tail_mass"].size() == 2);
    CHECK(m["results"]["tail_threshold"] == 8.0);
  }

  SUBCASE("needs at least two cells and only one sweep axis") {
    ExperimentConfig cfg;
    cfg.out_dir = tmp.sub("bad");
    CHECK_THROWS_AS(run_compare(cfg), ConfigError);
    cfg.steps_list = {100};
    CHECK_THROWS_AS(run_compare(cfg), ConfigError);
    cfg.steps_list = {100, 200};
    cfg.hurst_list = {0.5, 0.6};
    CHECK_THROWS_AS(run_compare(cfg), ConfigError);
  }
}

TEST_CASE("diagnose pipeline") {
  TempDir tmp("diagnose");
  ExperimentConfig cfg;
  cfg.steps = 2000;
  cfg.gamma = 0.05;
  cfg.functionals = {"holder", "qgamma", "lyapunov", "tail"};
  cfg.out_dir = tmp.sub("d");
  run_diagnose(cfg);
  std::ifstream in(tmp.sub("d") + "/diagnostics.csv");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("functional,params,value,batch_se") != std::string::npos);
  CHECK(text.find("holder_seminorm") != std::string::npos);
  CHECK(text.find("quadratic_functional") != std::string::npos);
  CHECK(text.find("lyapunov_average") != std::string::npos);
  CHECK(text.find("tail_mass") != std::string::npos);
  CHECK(text.find("young_rate_slope") == std::string::npos);  // not requested
  CHECK(fs::exists(tmp.sub("d") + "/lyapunov_series.csv"));
}

TEST_CASE("fgn-test pipeline emits the acf table") {
  TempDir tmp("fgntest");
  ExperimentConfig cfg;
  cfg.hurst = 0.5;
  cfg.gamma = 1.0;
  cfg.steps = 2048;
  cfg.fgn_seeds = 8;
  cfg.fgn_lags = 5;
  cfg.out_dir = tmp.sub("f");
  run_fgn_test(cfg);
  std::ifstream in(tmp.sub("f") + "/fgn_acf.csv");
  std::string line;
  std::getline(in, line);  // provenance
  std::getline(in, line);
  CHECK(line == "lag,analytic,empirical,z_score");
  std::getline(in, line);  // lag 0: analytic 1 for H=0.5, gamma=1
  CHECK(line.rfind("0,1,", 0) == 0);
  std::getline(in, line);  // lag 1: analytic exactly 0
  CHECK(line.rfind("1,0,", 0) == 0);
}

TEST_CASE("resource errors surface from the noise cap") {
  ExperimentConfig cfg;
  cfg.steps = 1000;
  cfg.mem_cap = 100;
  cfg.out_dir = (fs::temp_directory_path() / "fsde_cap").string();
  CHECK_THROWS_AS(run_simulate(cfg), ResourceError);
  fs::remove_all(cfg.out_dir);
}
