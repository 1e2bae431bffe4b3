#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace fsde {

struct BatchMeansResult {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean from non-overlapping batches
  Eigen::Index batches = 0;
  Eigen::Index batch_length = 0;
};

// Non-overlapping batch means. The sequence may be long-range dependent, so
// the i.i.d. CLT does not apply to raw samples; batching over nb blocks is
// the variance estimator used throughout.
inline BatchMeansResult batch_means(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    Eigen::Index nb = 30) {
  if (nb < 2) throw std::invalid_argument("batch_means: need at least 2 batches");
  const Eigen::Index n = x.size();
  if (n < nb) throw std::invalid_argument("batch_means: fewer samples than batches");
  const Eigen::Index len = n / nb;  // trailing remainder is dropped
  BatchMeansResult r;
  r.batches = nb;
  r.batch_length = len;
  Eigen::VectorXd bm(nb);
  for (Eigen::Index b = 0; b < nb; ++b) bm[b] = x.segment(b * len, len).mean();
  r.mean = bm.mean();
  const double var = (bm.array() - r.mean).square().sum() / static_cast<double>(nb - 1);
  r.se = std::sqrt(var / static_cast<double>(nb));
  return r;
}

// Least-squares slope of y against x (used for log-log rate ladders).
inline double regression_slope(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("regression_slope: need two equally sized samples");
  const double mx = x.mean();
  const double my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  if (sxx == 0.0) throw std::invalid_argument("regression_slope: degenerate abscissa");
  return (x.array() - mx).cwiseProduct(y.array() - my).sum() / sxx;
}

inline double median(Eigen::VectorXd v) {
  if (v.size() == 0) throw std::invalid_argument("median: empty sample");
  std::sort(v.data(), v.data() + v.size());
  const Eigen::Index n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace fsde
