#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fsde/ergodic.hpp"
#include "fsde/stats.hpp"

using namespace fsde;

namespace {

Trajectory toy_run(double hurst, double gamma, Eigen::Index steps, std::uint64_t seed,
                   double x0 = 0.0) {
  const ModelBundle mb = make_model("toy");
  const FgnSequence noise = generate_fgn({hurst, gamma, steps, seed});
  EulerConfig cfg;
  cfg.gamma = gamma;
  cfg.steps = steps;
  cfg.initial_state = Eigen::VectorXd::Constant(1, x0);
  cfg.keep_noise = false;
  return run_euler(mb.model, cfg, noise);
}

Trajectory deterministic_run(double slope, double gamma, Eigen::Index steps, double x0) {
  ModelBundle mb;
  mb.model.name = "lin";
  mb.model.dim_state = mb.model.dim_noise = 1;
  mb.model.drift = [slope](const Eigen::Ref<const Eigen::VectorXd>& x,
                           Eigen::Ref<Eigen::VectorXd> out) { out[0] = slope * x[0]; };
  mb.model.diffusion = [](const Eigen::Ref<const Eigen::VectorXd>&,
                          Eigen::Ref<Eigen::MatrixXd> out) { out(0, 0) = 0.0; };
  const FgnSequence noise = generate_fgn({0.75, gamma, steps, 1});
  EulerConfig cfg;
  cfg.gamma = gamma;
  cfg.steps = steps;
  cfg.initial_state = Eigen::VectorXd::Constant(1, x0);
  cfg.keep_noise = false;
  return run_euler(mb.model, cfg, noise);
}

}  // namespace

TEST_CASE("marginal occupation basics") {
  const Trajectory traj = deterministic_run(0.0, 0.1, 20, 5.0);  // constant at 5

  SUBCASE("n = 1 is a single atom at x0") {
    const MarginalOccupation m = marginal_occupation(traj, 1);
    CHECK(m.state(0)[0] == 5.0);
    CHECK(evaluate_functional(m, [](const Eigen::Ref<const Eigen::VectorXd>& x) {
            return x[0] * x[0];
          }) == 25.0);
  }
  SUBCASE("constant trajectory averages f(5) for any n") {
    const MarginalOccupation m = marginal_occupation(traj, 21);
    const double avg = evaluate_functional(
        m, [](const Eigen::Ref<const Eigen::VectorXd>& x) { return std::tanh(x[0]); });
    CHECK(avg == doctest::Approx(std::tanh(5.0)).epsilon(1e-15));
  }
  SUBCASE("n out of range") {
    CHECK_THROWS_AS(marginal_occupation(traj, 22), std::invalid_argument);
    CHECK_THROWS_AS(marginal_occupation(traj, 0), std::invalid_argument);
    CHECK_THROWS_AS(marginal_occupation(traj, 20, 2), std::invalid_argument);
  }
}

TEST_CASE("window occupation basics") {
  const Trajectory traj = toy_run(0.75, 0.05, 400, 7);

  SUBCASE("one atom with the whole horizon") {
    const OccupationMeasureView occ = window_occupation(traj, 1, traj.horizon());
    CHECK(occ.window_len == 401);
    CHECK(occ.atom(0).values == traj.grid_values);
  }
  SUBCASE("constant path gives identical windows") {
    const Trajectory c = deterministic_run(0.0, 0.05, 100, 2.0);
    const OccupationMeasureView occ = window_occupation(c, 50, 1.0);
    for (Eigen::Index k : {0, 10, 49})
      CHECK((occ.atom(k).values.array() == 2.0).all());
  }
  SUBCASE("horizon shortfall") {
    CHECK_THROWS_AS(window_occupation(traj, 400, 1.0), std::invalid_argument);
    CHECK(window_occupation(traj, 381, 1.0).n == 381);
  }
  SUBCASE("F identically 1 averages to 1") {
    const OccupationMeasureView occ = window_occupation(traj, 100, 1.0);
    CHECK(evaluate_functional(occ, [](const PathSegment&) { return 1.0; }) == 1.0);
  }
}

TEST_CASE("marginal equals the time-0 marginal of windows") {
  const Trajectory traj = toy_run(0.75, 0.05, 300, 9);
  for (double T : {0.25, 1.0}) {
    const OccupationMeasureView occ = window_occupation(traj, 200, T);
    const MarginalOccupation marg = marginal_occupation(traj, 200);
    for (Eigen::Index k : {0, 57, 199})
      CHECK(occ.atom(k).values(0, 0) == marg.state(k)[0]);
  }
}

TEST_CASE("functional evaluation is linear and order-insensitive") {
  const Trajectory traj = toy_run(0.75, 0.05, 2000, 11);
  const MarginalOccupation m = marginal_occupation(traj, 2000);
  const StateFunctional f = [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return std::sin(x[0]);
  };
  const StateFunctional g = [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return x[0] * x[0];
  };
  const double fa = evaluate_functional(m, f);
  const double ga = evaluate_functional(m, g);
  const StateFunctional combo = [&](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return 2.0 * f(x) - 3.0 * g(x);
  };
  CHECK(evaluate_functional(m, combo) ==
        doctest::Approx(2.0 * fa - 3.0 * ga).epsilon(1e-12));

  // jobs must not change the result (fixed chunking and reduction order)
  CHECK(evaluate_functional(m, g, 1) == evaluate_functional(m, g, 4));
}

TEST_CASE("non-finite functional values abort with the atom index") {
  const Trajectory traj = toy_run(0.75, 0.05, 50, 3);
  const MarginalOccupation m = marginal_occupation(traj, 50);
  const StateFunctional bad = [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return 1.0 / (x[0] - x[0]);  // inf
  };
  CHECK_THROWS_AS(evaluate_functional(m, bad), NumericalError);
  try {
    evaluate_functional(m, bad);
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("atom") != std::string::npos);
  }
}

TEST_CASE("series checkpoints are recomputable prefix averages") {
  const Trajectory traj = toy_run(0.75, 0.05, 500, 13);
  const MarginalOccupation m = marginal_occupation(traj, 500);
  const StateFunctional f = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return x[0]; };
  const TimeAverageSeries s = evaluate_series(m, f, {10, 100, 500}, "x");
  REQUIRE(s.partial_averages.size() == 3);
  for (int c = 0; c < 3; ++c) {
    const Eigen::Index cut = s.checkpoints[static_cast<std::size_t>(c)];
    double acc = 0.0;
    for (Eigen::Index k = 0; k < cut; ++k) acc += traj.grid_values(0, k);
    CHECK(s.partial_averages[c] ==
          doctest::Approx(acc / static_cast<double>(cut)).epsilon(1e-13));
  }
  CHECK(std::isnan(s.batch_se[0]));       // 10 < 2 * 30 samples
  CHECK(std::isfinite(s.batch_se[2]));    // 500 batches fine
  CHECK_THROWS_AS(evaluate_series(m, f, {0}, "x"), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_series(m, f, {501}, "x"), std::invalid_argument);
}

TEST_CASE("degenerate V identically 1 averages to 1") {
  const Trajectory traj = toy_run(0.75, 0.05, 100, 3);
  LyapunovSpec flat;
  flat.value = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 1.0; };
  flat.gradient = [](const Eigen::Ref<const Eigen::VectorXd>&,
                     Eigen::Ref<Eigen::VectorXd> out) { out.setZero(); };
  const TimeAverageSeries s = lyapunov_average(traj, flat, 2.0, {10, 100});
  CHECK(s.partial_averages[0] == 1.0);
  CHECK(s.partial_averages[1] == 1.0);
}

TEST_CASE("lyapunov averages contract for deterministic decay") {
  // b = -x, sigma = 0, x0 = 10: V(x_k) = 1 + 100 (1-gamma)^{2k} decreases to 1.
  const Trajectory traj = deterministic_run(-1.0, 0.1, 200, 10.0);
  const ModelBundle mb = make_model("toy");  // V = 1 + x^2
  const TimeAverageSeries s =
      lyapunov_average(traj, mb.lyapunov, 1.0, {10, 50, 100, 200});
  for (Eigen::Index i = 1; i < s.partial_averages.size(); ++i)
    CHECK(s.partial_averages[i] < s.partial_averages[i - 1]);
  CHECK(s.partial_averages[s.partial_averages.size() - 1] > 1.0);
  // closed form for the first checkpoint
  double acc = 0.0;
  for (int k = 0; k < 10; ++k) acc += 1.0 + 100.0 * std::pow(0.9, 2 * k);
  CHECK(s.partial_averages[0] == doctest::Approx(acc / 10.0).epsilon(1e-12));
}

TEST_CASE("toy marginal mean is near zero within batch standard errors") {
  const Trajectory traj = toy_run(0.75, 0.05, 1'000'000, 2024);
  const Eigen::Index total = traj.stored_count() - 1;
  const Eigen::Index burn = total / 10;
  const MarginalOccupation m = marginal_occupation(traj, total - burn, burn);
  Eigen::VectorXd xs(m.n);
  for (Eigen::Index k = 0; k < m.n; ++k) xs[k] = m.state(k)[0];
  const BatchMeansResult bm = batch_means(xs);
  CHECK(std::abs(bm.mean) <= 4.0 * bm.se);
}

TEST_CASE("sup-V window averages stabilize between checkpoints") {
  const Trajectory traj = toy_run(0.75, 0.05, 100'000 + 20, 31);
  const ModelBundle mb = make_model("toy");
  const OccupationMeasureView occ = window_occupation(traj, 100'000, 1.0);
  const PathFunctional sup_v = [&](const PathSegment& seg) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < seg.size(); ++i)
      best = std::max(best, 1.0 + seg.values.col(i).squaredNorm());
    return best;
  };
  const TimeAverageSeries s =
      evaluate_series(occ, sup_v, {10'000, 100'000}, "supV", 2);
  const double spread = std::abs(s.partial_averages[1] - s.partial_averages[0]) /
                        s.partial_averages[1];
  CHECK(std::isfinite(s.partial_averages[1]));
  CHECK(spread <= 0.10);
}

TEST_CASE("window modulus averages decrease with delta") {
  const Trajectory traj = toy_run(0.75, 0.05, 20'000 + 20, 17);
  const OccupationMeasureView occ = window_occupation(traj, 20'000, 1.0);
  auto modulus_avg = [&](double delta) {
    return evaluate_functional(
        occ, [delta](const PathSegment& seg) { return holder_modulus(seg, 0.6, delta); }, 2);
  };
  const double a1 = modulus_avg(1.0);
  const double a05 = modulus_avg(0.5);
  const double a025 = modulus_avg(0.25);
  CHECK(std::isfinite(a1));
  CHECK(a025 <= a05);
  CHECK(a05 <= a1);
  CHECK(a025 < a1);
}

TEST_CASE("dropping the first window moves bounded averages by O(1/n)") {
  const Trajectory traj = toy_run(0.75, 0.05, 10'020, 23);
  const PathFunctional f = [](const PathSegment& seg) {
    return std::tanh(seg.values(0, 0));  // bounded by 1
  };
  const Eigen::Index n = 10'000;
  const double full = evaluate_functional(window_occupation(traj, n, 1.0), f);
  const double dropped = evaluate_functional(window_occupation(traj, n - 1, 1.0, 1), f);
  CHECK(std::abs(dropped - full) <= 2.0 / static_cast<double>(n));
}

TEST_CASE("tail mass") {
  const Trajectory zero = deterministic_run(0.0, 0.1, 10, 0.0);
  CHECK(tail_mass(marginal_occupation(zero, 11), 1.0) == 0.0);

  const Trajectory two = deterministic_run(0.0, 0.1, 1, 2.0);
  Trajectory mixed = two;
  mixed.grid_values(0, 1) = -2.0;
  CHECK(tail_mass(marginal_occupation(mixed, 2), 1.0) == 1.0);
  CHECK(tail_mass(marginal_occupation(mixed, 2), 3.0) == 0.0);
  CHECK_THROWS_AS(tail_mass(marginal_occupation(mixed, 2), 0.0), std::invalid_argument);
}

TEST_CASE("series csv layout") {
  TimeAverageSeries s;
  s.functional_id = "V^1";
  s.checkpoints = {2, 4};
  s.partial_averages.resize(2);
  s.partial_averages << 1.5, 1.25;
  s.batch_se.resize(2);
  s.batch_se << 0.1, 0.05;
  std::ostringstream os;
  write_series_csv(s, os);
  CHECK(os.str().find("m,average,batch_se") != std::string::npos);
  CHECK(os.str().find("2,1.5,0.1") != std::string::npos);
}
