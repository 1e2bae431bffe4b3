#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <thread>

#include "fsde/fgn.hpp"
#include "fsde/stats.hpp"
#include "oracles.hpp"

using namespace fsde;

TEST_CASE("autocovariance closed forms") {
  // lag 0 is the increment variance step^{2H}
  CHECK(fgn_autocovariance(0.75, 1.0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  // H = 1/2: Brownian increments are independent
  CHECK(std::abs(fgn_autocovariance(0.5, 1.0, 3)) <= 1e-15);
  // H = 3/4, lag 1: (2^{1.5} - 2)/2 = sqrt(2) - 1
  CHECK(fgn_autocovariance(0.75, 1.0, 1) ==
        doctest::Approx(0.41421356237309515).epsilon(1e-14));
}

TEST_CASE("autocovariance scaling law is exact") {
  for (double hurst : {0.55, 0.75, 0.9})
    for (double step : {0.05, 0.02, 1.7})
      for (Eigen::Index lag : {0, 1, 2, 5, 20}) {
        const double scaled = std::pow(step, 2.0 * hurst) * fgn_autocovariance(hurst, 1.0, lag);
        CHECK(fgn_autocovariance(hurst, step, lag) == scaled);
      }
}

TEST_CASE("long-range dependence: positive, slowly decaying acf for H = 0.9") {
  double prev = fgn_autocovariance(0.9, 1.0, 1);
  for (Eigen::Index k = 2; k <= 20; ++k) {
    const double c = fgn_autocovariance(0.9, 1.0, k);
    CHECK(c > 0.0);
    CHECK(c < prev);
    prev = c;
  }
  // ~ k^{2H-2} tail: halving distance from lag 10 to 20 loses ~13% only
  CHECK(fgn_autocovariance(0.9, 1.0, 20) > 0.8 * fgn_autocovariance(0.9, 1.0, 10));
}

TEST_CASE("distinct draws may run concurrently against one engine") {
  FgnEngine engine(0.75, 1.0, 1 << 12, kDefaultFgnCountCap);
  const Eigen::VectorXd serial_a = engine.generate_pair(1).first;
  const Eigen::VectorXd serial_b = engine.generate_pair(2).first;
  Eigen::VectorXd par_a, par_b;
  std::thread ta([&] { par_a = engine.generate_pair(1).first; });
  std::thread tb([&] { par_b = engine.generate_pair(2).first; });
  ta.join();
  tb.join();
  CHECK(par_a == serial_a);
  CHECK(par_b == serial_b);
}

TEST_CASE("autocovariance domain errors") {
  CHECK_THROWS_AS(fgn_autocovariance(0.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(fgn_autocovariance(1.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(fgn_autocovariance(1.5, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(fgn_autocovariance(0.75, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(fgn_autocovariance(0.75, -1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(fgn_autocovariance(0.75, 1.0, -1), std::invalid_argument);
}

TEST_CASE("identical configs give bit-identical sequences") {
  const FgnConfig cfg{0.7, 0.05, 4096, 12345};
  const FgnSequence a = generate_fgn(cfg, 2);
  const FgnSequence b = generate_fgn(cfg, 2);
  REQUIRE(a.increments.rows() == 2);
  REQUIRE(a.increments.cols() == 4096);
  CHECK(a.increments == b.increments);
  // different seed, different draw
  FgnConfig other = cfg;
  other.seed = 54321;
  CHECK(generate_fgn(other, 1).increments != a.increments.topRows(1));
}

TEST_CASE("pair draws are decorrelated and coordinates independent") {
  FgnEngine engine(0.75, 1.0, 1 << 14, kDefaultFgnCountCap);
  const auto [a, b] = engine.generate_pair(99);
  const double corr = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
  CHECK(std::abs(corr) < 0.05);
  const FgnSequence seq = engine.generate(7, 2);
  const Eigen::VectorXd r0 = seq.increments.row(0).transpose();
  const Eigen::VectorXd r1 = seq.increments.row(1).transpose();
  const double cross = r0.dot(r1) / std::sqrt(r0.squaredNorm() * r1.squaredNorm());
  CHECK(std::abs(cross) < 0.05);
}

TEST_CASE("empirical autocovariance matches the formula across seeds") {
  const Eigen::Index count = 1 << 14;
  const Eigen::Index nseeds = 30;
  const Eigen::Index lags = 10;
  for (double hurst : {0.55, 0.75}) {
    FgnEngine engine(hurst, 1.0, count, kDefaultFgnCountCap);
    Eigen::MatrixXd acf(nseeds, lags + 1);
    for (Eigen::Index s = 0; s < nseeds; ++s) {
      const Eigen::VectorXd x = engine.generate_pair(sub_seed(4242, s)).first;
      for (Eigen::Index k = 0; k <= lags; ++k) {
        double dot = 0.0;
        for (Eigen::Index i = 0; i + k < count; ++i) dot += x[i] * x[i + k];
        acf(s, k) = dot / static_cast<double>(count - k);
      }
    }
    for (Eigen::Index k = 0; k <= lags; ++k) {
      const double mean = acf.col(k).mean();
      const double sd = std::sqrt((acf.col(k).array() - mean).square().sum() /
                                  static_cast<double>(nseeds - 1));
      const double se = sd / std::sqrt(static_cast<double>(nseeds));
      const double analytic = fgn_autocovariance(hurst, 1.0, k);
      INFO("H=", hurst, " lag=", k);
      CHECK(std::abs(mean - analytic) <= 3.0 * se);
    }
  }
}

TEST_CASE("single-increment variance is near step^{2H}") {
  const double hurst = 0.8, step = 0.05;
  const FgnSequence seq = generate_fgn({hurst, step, 1 << 16, 31});
  const Eigen::VectorXd x = seq.increments.row(0).transpose();
  const double var = x.squaredNorm() / static_cast<double>(x.size());
  CHECK(var == doctest::Approx(std::pow(step, 2.0 * hurst)).epsilon(0.05));
}

TEST_CASE("cholesky cross-check of the generator's low-lag covariance") {
  // Independent construction: exact covariance matrix + Cholesky.
  const double hurst = 0.75;
  const Eigen::Index count = 32;
  const Eigen::MatrixXd inc = testing::cholesky_fgn_samples(hurst, 1.0, count, 4000, 11);
  for (Eigen::Index lag : {0, 1, 2}) {
    double acc = 0.0;
    Eigen::Index terms = 0;
    for (Eigen::Index r = 0; r < inc.rows(); ++r)
      for (Eigen::Index i = 0; i + lag < count; ++i, ++terms) acc += inc(r, i) * inc(r, i + lag);
    const double emp = acc / static_cast<double>(terms);
    CHECK(emp == doctest::Approx(fgn_autocovariance(hurst, 1.0, lag)).epsilon(0.05));
  }
}

TEST_CASE("embedding spectrum is nonnegative across the tested grid") {
  for (double hurst : {0.55, 0.75, 0.9, 0.95})
    for (Eigen::Index count : {2, 5, 64, 1000, 4097}) {
      FgnEngine engine(hurst, 0.05, count, kDefaultFgnCountCap);
      CHECK(engine.min_eigenvalue() >= -1e-8);
    }
}

TEST_CASE("embedding failure reports the most negative eigenvalue") {
  // Synthetic indefinite circulant: first row (0,1,0,...,0,1) has eigenvalues
  // 2 cos(2 pi k / m).
  Eigen::ArrayXd row = Eigen::ArrayXd::Zero(16);
  row[1] = 1.0;
  row[15] = 1.0;
  const Eigen::ArrayXd eig = circulant_eigenvalues(row);
  CHECK(eig.minCoeff() == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK_THROWS_AS(check_embedding_spectrum(eig), EmbeddingError);
  try {
    check_embedding_spectrum(eig);
  } catch (const EmbeddingError& e) {
    CHECK(e.worst_eigenvalue() == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(std::string(e.what()).find("eigenvalue") != std::string::npos);
  }
}

TEST_CASE("count cap raises a resource error") {
  CHECK_THROWS_AS(FgnEngine(0.75, 1.0, 100, 50), ResourceError);
  CHECK_THROWS_AS(generate_fgn({0.75, 1.0, 100, 1}, 1, 50), ResourceError);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(generate_fgn({1.5, 1.0, 10, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate_fgn({0.75, 0.0, 10, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate_fgn({0.75, 1.0, 0, 0}), std::invalid_argument);
}

TEST_CASE("cumulate basics") {
  FgnSequence seq;
  seq.config = FgnConfig{0.5, 1.0, 3, 0};
  seq.increments.resize(1, 3);

  seq.increments << 0.0, 0.0, 0.0;
  Eigen::MatrixXd path = cumulate(seq);
  CHECK(path == Eigen::MatrixXd::Zero(1, 4));

  seq.increments << 1.0, 1.0, 1.0;
  path = cumulate(seq);
  Eigen::MatrixXd expect(1, 4);
  expect << 0.0, 1.0, 2.0, 3.0;
  CHECK(path == expect);
}

TEST_CASE("cumulate stays close to extended-precision accumulation") {
  const FgnSequence seq = generate_fgn({0.75, 1.0, 1 << 20, 77});
  const Eigen::VectorXd inc = seq.increments.row(0).transpose();
  const Eigen::VectorXd path = cumulate(inc);
  long double acc = 0.0L;
  double scale = 0.0, worst = 0.0;
  for (Eigen::Index k = 0; k < inc.size(); ++k) {
    acc += static_cast<long double>(inc[k]);
    scale = std::max(scale, static_cast<double>(std::abs(acc)));
    worst = std::max(worst, std::abs(static_cast<double>(acc - static_cast<long double>(path[k + 1]))));
  }
  CHECK(worst / std::max(scale, 1.0) < 1e-12);
}

TEST_CASE("csv dump carries the provenance header") {
  const FgnSequence seq = generate_fgn({0.6, 0.25, 4, 9}, 2);
  std::ostringstream os;
  write_fgn_csv(seq, os);
  const std::string text = os.str();
  CHECK(text.rfind("# fgn H=0.6 gamma=0.25 n=4 seed=9", 0) == 0);
  // one data row per increment
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}
