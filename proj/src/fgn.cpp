#include "fsde/fgn.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <ostream>
#include <sstream>
#include <vector>

#include "fsde/rng.hpp"

namespace fsde {

void FgnConfig::validate() const {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::invalid_argument("fgn: hurst must lie in (0,1)");
  if (!(step > 0.0)) throw std::invalid_argument("fgn: step must be positive");
  if (count < 1) throw std::invalid_argument("fgn: count must be at least 1");
}

double fgn_autocovariance(double hurst, double step, Eigen::Index lag) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::invalid_argument("fgn_autocovariance: hurst must lie in (0,1)");
  if (!(step > 0.0))
    throw std::invalid_argument("fgn_autocovariance: step must be positive");
  if (lag < 0) throw std::invalid_argument("fgn_autocovariance: lag must be nonnegative");
  const double two_h = 2.0 * hurst;
  const double k = static_cast<double>(lag);
  const double shape =
      0.5 * (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) +
             std::pow(std::abs(k - 1.0), two_h));
  return std::pow(step, two_h) * shape;
}

Eigen::ArrayXd circulant_eigenvalues(const Eigen::Ref<const Eigen::ArrayXd>& first_row) {
  const Eigen::Index m = first_row.size();
  std::vector<std::complex<double>> in(static_cast<std::size_t>(m));
  std::vector<std::complex<double>> out(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) in[static_cast<std::size_t>(j)] = {first_row[j], 0.0};
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  Eigen::ArrayXd eig(m);
  for (Eigen::Index j = 0; j < m; ++j) eig[j] = out[static_cast<std::size_t>(j)].real();
  return eig;
}

Eigen::ArrayXd check_embedding_spectrum(const Eigen::ArrayXd& eigenvalues) {
  const double peak = eigenvalues.maxCoeff();
  const double floor = 1e-10 * std::max(peak, 1e-300);
  const double worst = eigenvalues.minCoeff();
  if (worst < -floor) {
    std::ostringstream msg;
    msg << "circulant embedding failed: eigenvalue " << worst
        << " below the numerical floor " << -floor;
    throw EmbeddingError(msg.str(), worst);
  }
  return eigenvalues.max(0.0);
}

namespace {

// Smallest 2^k with 2^k + 1 >= count; the embedding order is then 2^{k+1}.
Eigen::Index padded_half_order(Eigen::Index count) {
  Eigen::Index half = 1;
  while (half + 1 < count) half <<= 1;
  return half;
}

}  // namespace

FgnEngine::FgnEngine(double hurst, double step, Eigen::Index count, Eigen::Index count_cap)
    : hurst_(hurst), step_(step), count_(count) {
  FgnConfig probe{hurst, step, count, 0};
  probe.validate();
  if (count > count_cap) {
    std::ostringstream msg;
    msg << "fgn: count " << count << " exceeds the memory cap " << count_cap
        << " increments";
    throw ResourceError(msg.str());
  }
  const Eigen::Index half = padded_half_order(count);
  fft_size_ = 2 * half;

  Eigen::ArrayXd first_row(fft_size_);
  for (Eigen::Index j = 0; j <= half; ++j)
    first_row[j] = fgn_autocovariance(hurst, step, j);
  for (Eigen::Index j = half + 1; j < fft_size_; ++j)
    first_row[j] = first_row[fft_size_ - j];

  Eigen::ArrayXd eig = circulant_eigenvalues(first_row);
  min_eigenvalue_ = eig.minCoeff();
  eig = check_embedding_spectrum(eig);
  spectral_scale_ = (eig / static_cast<double>(fft_size_)).sqrt();
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> FgnEngine::generate_pair(std::uint64_t seed) const {
  const Eigen::Index m = fft_size_;
  std::vector<std::complex<double>> noise(static_cast<std::size_t>(m));
  GaussianStream gauss(seed);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double u = gauss.next();
    const double v = gauss.next();
    noise[static_cast<std::size_t>(k)] = {spectral_scale_[k] * u, spectral_scale_[k] * v};
  }
  std::vector<std::complex<double>> transformed(static_cast<std::size_t>(m));
  Eigen::FFT<double> fft;
  fft.fwd(transformed, noise);

  Eigen::VectorXd a(count_), b(count_);
  for (Eigen::Index j = 0; j < count_; ++j) {
    a[j] = transformed[static_cast<std::size_t>(j)].real();
    b[j] = transformed[static_cast<std::size_t>(j)].imag();
  }
  return {std::move(a), std::move(b)};
}

FgnSequence FgnEngine::generate(std::uint64_t seed, Eigen::Index dimension) const {
  if (dimension < 1) throw std::invalid_argument("fgn: dimension must be positive");
  FgnSequence seq;
  seq.config = FgnConfig{hurst_, step_, count_, seed};
  seq.increments.resize(dimension, count_);
  for (Eigen::Index j = 0; j < dimension; ++j) {
    auto pair = generate_pair(sub_seed(seed, static_cast<std::uint64_t>(j)));
    seq.increments.row(j) = pair.first.transpose();
  }
  return seq;
}

FgnSequence generate_fgn(const FgnConfig& config, Eigen::Index dimension,
                         Eigen::Index count_cap) {
  config.validate();
  FgnEngine engine(config.hurst, config.step, config.count, count_cap);
  return engine.generate(config.seed, dimension);
}

namespace {

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

Eigen::VectorXd cumulate(const Eigen::Ref<const Eigen::VectorXd>& increments) {
  Eigen::VectorXd path(increments.size() + 1);
  path[0] = 0.0;
  CompensatedSum acc;
  for (Eigen::Index k = 0; k < increments.size(); ++k) {
    acc.add(increments[k]);
    path[k + 1] = acc.value();
  }
  return path;
}

Eigen::MatrixXd cumulate(const FgnSequence& seq) {
  Eigen::MatrixXd path(seq.dimension(), seq.increments.cols() + 1);
  for (Eigen::Index j = 0; j < seq.dimension(); ++j)
    path.row(j) = cumulate(seq.increments.row(j).transpose()).transpose();
  return path;
}

void write_fgn_csv(const FgnSequence& seq, std::ostream& os) {
  char buf[64];
  os << "# fgn H=" << seq.config.hurst << " gamma=" << seq.config.step
     << " n=" << seq.config.count << " seed=" << seq.config.seed << "\n";
  for (Eigen::Index k = 0; k < seq.increments.cols(); ++k) {
    for (Eigen::Index j = 0; j < seq.dimension(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", seq.increments(j, k));
      os << (j ? "," : "") << buf;
    }
    os << "\n";
  }
}

}  // namespace fsde
