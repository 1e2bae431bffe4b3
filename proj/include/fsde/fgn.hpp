#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <utility>

#include "fsde/errors.hpp"

namespace fsde {

// Fractional Gaussian noise: the stationary increment sequence of fractional
// Brownian motion on a uniform grid of mesh `step`, simulated exactly by
// circulant embedding of the increment covariance (eigenvalues via FFT).

struct FgnConfig {
  double hurst = 0.5;
  double step = 1.0;          // grid mesh, the gamma of the scheme
  Eigen::Index count = 1;     // number of increments
  std::uint64_t seed = 0;

  void validate() const;      // throws std::invalid_argument
};

struct FgnSequence {
  FgnConfig config;
  Eigen::MatrixXd increments;  // dimension x count, one row per coordinate

  Eigen::Index dimension() const { return increments.rows(); }
};

// Autocovariance of fGn with mesh `step` at integer lag:
//   step^{2H} * (|lag+1|^{2H} - 2 lag^{2H} + |lag-1|^{2H}) / 2,
// the polarization of E[(B_t - B_s)^2] = |t-s|^{2H}.
double fgn_autocovariance(double hurst, double step, Eigen::Index lag);

// Default cap on `count`; FFT workspace grows past practical memory above it.
inline constexpr Eigen::Index kDefaultFgnCountCap = 20'000'000;

// Precomputes the circulant spectrum for a (hurst, step, count) triple so
// repeated draws (seeds, coordinates) skip the eigenvalue transform.
//
// The covariance of count' = 2^k + 1 >= count lags is embedded into a
// circulant of order m = 2^{k+1}; a draw consumes two independent standard
// normal vectors (the real and imaginary parts of the spectral noise) and
// one transform yields two usable samples.
class FgnEngine {
public:
  FgnEngine(double hurst, double step, Eigen::Index count,
            Eigen::Index count_cap = kDefaultFgnCountCap);

  // Two independent exact fGn samples from one transform.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> generate_pair(std::uint64_t seed) const;

  // One sample per coordinate; coordinate j draws from sub_seed(seed, j).
  FgnSequence generate(std::uint64_t seed, Eigen::Index dimension = 1) const;

  double hurst() const { return hurst_; }
  double step() const { return step_; }
  Eigen::Index count() const { return count_; }
  Eigen::Index fft_size() const { return fft_size_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

private:
  double hurst_;
  double step_;
  Eigen::Index count_;
  Eigen::Index fft_size_;
  double min_eigenvalue_;
  Eigen::ArrayXd spectral_scale_;  // sqrt(eigenvalue_k / m), clamped at 0
};

// One-shot convenience wrapper around FgnEngine.
FgnSequence generate_fgn(const FgnConfig& config, Eigen::Index dimension = 1,
                         Eigen::Index count_cap = kDefaultFgnCountCap);

// Eigenvalues of the circulant with the given first row (real DFT output).
// Exposed so the embedding failure path is testable with a synthetic row.
Eigen::ArrayXd circulant_eigenvalues(const Eigen::Ref<const Eigen::ArrayXd>& first_row);

// Validates nonnegativity of a circulant spectrum up to a relative floor;
// throws EmbeddingError naming the most negative eigenvalue.
Eigen::ArrayXd check_embedding_spectrum(const Eigen::ArrayXd& eigenvalues);

// Prefix sums starting at 0: the sampled fBm path "B_{k step}", one row per
// coordinate, count+1 entries. Compensated so cumulative rounding stays
// below 1e-10 relative at 1e7 terms.
Eigen::MatrixXd cumulate(const FgnSequence& seq);
Eigen::VectorXd cumulate(const Eigen::Ref<const Eigen::VectorXd>& increments);

// CSV dump, one column per coordinate, header
//   # fgn H=<h> gamma=<g> n=<n> seed=<s>
void write_fgn_csv(const FgnSequence& seq, std::ostream& os);

}  // namespace fsde
