#pragma once

#include <Eigen/Dense>
#include <optional>

namespace fsde {

// Path-regularity functionals over sampled paths. All functionals treat the
// path as unknown between samples; suprema run over sampled pairs only, with
// the 0/0 = 0 convention for empty or singleton pair sets.

struct SampledPath {
  Eigen::VectorXd times;   // strictly increasing
  Eigen::MatrixXd values;  // d x N
  std::optional<double> uniform_step;

  void validate() const;  // throws std::invalid_argument
};

SampledPath make_uniform_path(double t0, double step, Eigen::MatrixXd values);

// Non-owning view of a uniformly sampled path stretch (an occupation-measure
// atom is one of these).
struct PathSegment {
  double start_time = 0.0;
  double step = 1.0;
  Eigen::Ref<const Eigen::MatrixXd> values;  // d x N

  Eigen::Index size() const { return values.cols(); }
  double duration() const { return step * static_cast<double>(values.cols() - 1); }
};

struct HolderReport {
  double theta = 0.0;
  double interval_s = 0.0;
  double interval_t = 0.0;
  double seminorm = 0.0;
  double argmax_u = 0.0;  // pair achieving the supremum
  double argmax_v = 0.0;
};

enum class HolderMode {
  kExact,   // all sampled pairs, O(n^2)
  kPruned,  // branch-and-bound over blocks; same maximum, certified by
            // conservative box/time-gap upper bounds
  kAuto,    // exact up to 10^4 samples, pruned above
};

// sup |f(v)-f(u)| / (v-u)^theta over sampled pairs inside [s, t].
HolderReport holder_seminorm(const SampledPath& path, double theta, double s, double t,
                             HolderMode mode = HolderMode::kAuto);

// Same supremum restricted to pairs with 0 < v - u <= delta, over [0, T].
double holder_modulus(const SampledPath& path, double theta, double T, double delta,
                      HolderMode mode = HolderMode::kAuto);

double holder_seminorm_value(const PathSegment& seg, double theta,
                             HolderMode mode = HolderMode::kAuto);
double holder_modulus(const PathSegment& seg, double theta, double delta,
                      HolderMode mode = HolderMode::kAuto);

// Discrete p-variation over subdivisions through sample points in [u, v],
// exact via dynamic programming. Capped at 10^4 samples in the interval.
double p_variation(const SampledPath& path, double p, double u, double v);

// Q_gamma: sum of squared increments along the uniform grid up to T.
double quadratic_functional(const SampledPath& path, double T);

// Left-point Riemann-Stieltjes sum: sum_k f(alpha_{k gamma}) (beta increments)
// up to time t, integrand frozen at the last grid point below s. The driver
// must be scalar and sampled on a grid refining gamma that contains t.
Eigen::VectorXd young_discrete_integral(const SampledPath& integrand,
                                        const SampledPath& driver, double gamma, double t);

}  // namespace fsde
