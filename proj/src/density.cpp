#include "fsde/density.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include "fsde/errors.hpp"
#include "fsde/parallel.hpp"

namespace fsde {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310005;

void check_uniform_grid(const Eigen::Ref<const Eigen::ArrayXd>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("density: grid needs at least 2 points");
  const double dx = grid[1] - grid[0];
  if (!(dx > 0.0)) throw std::invalid_argument("density: grid must be ascending");
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    const double step = grid[i] - grid[i - 1];
    if (std::abs(step - dx) > 1e-9 * std::max(1.0, std::abs(dx)))
      throw std::invalid_argument("density: grid must be uniform");
  }
}

}  // namespace

void KernelSpec::validate() const {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kernel: bandwidth must be positive");
}

double KernelSpec::density(double x) const {
  const double h = bandwidth;
  if (mode == Mode::kVarianceLike) return std::exp(-x * x / (2.0 * h)) / (kSqrt2Pi * h);
  return std::exp(-x * x / (2.0 * h * h)) / (kSqrt2Pi * h);
}

double KernelSpec::total_mass() const {
  return mode == Mode::kVarianceLike ? 1.0 / std::sqrt(bandwidth) : 1.0;
}

double KernelSpec::effective_stddev() const {
  return mode == Mode::kVarianceLike ? std::sqrt(bandwidth) : bandwidth;
}

DensityEstimate DensityEstimate::normalized() const {
  DensityEstimate out = *this;
  if (mass_scale != 1.0) {
    out.values /= mass_scale;
    out.normalization /= mass_scale;
    out.mass_scale = 1.0;
  }
  return out;
}

double trapezoid(const Eigen::Ref<const Eigen::ArrayXd>& grid,
                 const Eigen::Ref<const Eigen::ArrayXd>& values) {
  if (grid.size() != values.size() || grid.size() < 2)
    throw std::invalid_argument("trapezoid: mismatched or too short arrays");
  double sum = 0.0;
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    sum += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
  return sum;
}

DensityEstimate kde(const Eigen::Ref<const Eigen::VectorXd>& states, const KernelSpec& kernel,
                    const Eigen::Ref<const Eigen::ArrayXd>& grid, int jobs) {
  kernel.validate();
  check_uniform_grid(grid);
  const Eigen::Index n = states.size();
  if (n == 0) throw std::invalid_argument("kde: empty sample");

  const double h = kernel.bandwidth;
  const double inv_two_var = kernel.mode == KernelSpec::Mode::kVarianceLike
                                 ? 1.0 / (2.0 * h)
                                 : 1.0 / (2.0 * h * h);
  const double norm = 1.0 / (kSqrt2Pi * h * static_cast<double>(n));

  DensityEstimate est;
  est.grid = grid;
  est.values.setZero(grid.size());
  est.bandwidth = h;
  est.mass_scale = kernel.total_mass();

  const bool direct = n * grid.size() <= 1'000'000'000LL;
  std::vector<double> sorted;
  if (!direct) {
    sorted.assign(states.data(), states.data() + n);
    std::sort(sorted.begin(), sorted.end());
  }
  const double cutoff = 8.0 * kernel.effective_stddev();

  parallel_for_chunks(grid.size(), jobs, [&](Eigen::Index b, Eigen::Index e) {
    for (Eigen::Index i = b; i < e; ++i) {
      const double x = grid[i];
      double sum = 0.0;
      if (direct) {
        for (Eigen::Index k = 0; k < n; ++k) {
          const double d = x - states[k];
          sum += std::exp(-d * d * inv_two_var);
        }
      } else {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - cutoff);
        const auto hi = std::upper_bound(lo, sorted.end(), x + cutoff);
        for (auto it = lo; it != hi; ++it) {
          const double d = x - *it;
          sum += std::exp(-d * d * inv_two_var);
        }
      }
      est.values[i] = norm * sum;
    }
  }, 64);

  est.normalization = trapezoid(est.grid, est.values);
  return est;
}

namespace {

// Composite Simpson over [a, b] with an even number of substeps of length
// at most `max_step`.
double simpson(const std::function<double(double)>& f, double a, double b, double max_step) {
  if (a == b) return 0.0;
  const double len = std::abs(b - a);
  Eigen::Index halves = static_cast<Eigen::Index>(std::ceil(len / (2.0 * max_step)));
  halves = std::max<Eigen::Index>(halves, 1);
  const Eigen::Index n = 2 * halves;
  const double h = (b - a) / static_cast<double>(n);
  double sum = f(a) + f(b);
  for (Eigen::Index i = 1; i < n; ++i)
    sum += f(a + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

DensityEstimate oracle_density_h_half(const CoefficientModel& model,
                                      const Eigen::Ref<const Eigen::ArrayXd>& grid,
                                      double quad_step) {
  check_uniform_grid(grid);
  if (!(quad_step > 0.0))
    throw std::invalid_argument("oracle density: quad_step must be positive");
  if (model.dim_state != 1 || model.dim_noise != 1)
    throw std::invalid_argument("oracle density: model must be one-dimensional");

  Eigen::VectorXd xv(1);
  Eigen::VectorXd bv(1);
  Eigen::MatrixXd sv(1, 1);
  auto sigma2 = [&](double x) {
    xv[0] = x;
    model.diffusion(xv, sv);
    const double s = sv(0, 0);
    if (!(std::abs(s) > 1e-12))
      throw NumericalError("oracle density: sigma vanishes on the grid");
    return s * s;
  };
  std::function<double(double)> integrand = [&](double u) {
    xv[0] = u;
    model.drift(xv, bv);
    return 2.0 * bv[0] / sigma2(u);
  };

  const double kSubStep = quad_step;
  const Eigen::Index n = grid.size();
  // Cumulative exponent E(x) = int_0^x 2 b / sigma^2, one sweep per side of 0.
  Eigen::ArrayXd expo(n);
  Eigen::Index anchor = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    if (std::abs(grid[i]) < std::abs(grid[anchor])) anchor = i;
  expo[anchor] = simpson(integrand, 0.0, grid[anchor], kSubStep);
  for (Eigen::Index i = anchor + 1; i < n; ++i)
    expo[i] = expo[i - 1] + simpson(integrand, grid[i - 1], grid[i], kSubStep);
  for (Eigen::Index i = anchor - 1; i >= 0; --i)
    expo[i] = expo[i + 1] + simpson(integrand, grid[i + 1], grid[i], kSubStep);

  const double shift = expo.maxCoeff();  // overflow guard, cancels in the normalization
  DensityEstimate est;
  est.grid = grid;
  est.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    est.values[i] = std::exp(expo[i] - shift) / sigma2(grid[i]);
  const double mass = trapezoid(est.grid, est.values);
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw NumericalError("oracle density: normalization failed");
  est.values /= mass;
  est.normalization = 1.0;
  est.mass_scale = 1.0;
  return est;
}

Eigen::ArrayXd uniform_grid(double half_width, Eigen::Index points) {
  if (!(half_width > 0.0)) throw std::invalid_argument("grid: half width must be positive");
  if (points < 2) throw std::invalid_argument("grid: need at least 2 points");
  Eigen::ArrayXd g(points);
  const double dx = 2.0 * half_width / static_cast<double>(points - 1);
  for (Eigen::Index i = 0; i < points; ++i)
    g[i] = -half_width + dx * static_cast<double>(i);
  return g;
}

Eigen::ArrayXd default_kde_grid(const Eigen::Ref<const Eigen::VectorXd>& states,
                                Eigen::Index points) {
  if (states.size() < 2) throw std::invalid_argument("grid: need at least 2 states");
  const double mean = states.mean();
  const double sd =
      std::sqrt((states.array() - mean).square().sum() / static_cast<double>(states.size() - 1));
  return uniform_grid(std::max(6.0 * sd, 1e-6), points);
}

Eigen::ArrayXd default_oracle_grid(const CoefficientModel& model, Eigen::Index points) {
  // Expand until the unnormalized integrand at +-L is below 1e-12 of its
  // value at 0 (the speed measure decays like a Gaussian under dissipativity).
  double half = 2.0;
  for (; half < 1e4; half += 2.0) {
    const Eigen::ArrayXd probe = uniform_grid(half, 9);
    const DensityEstimate est = oracle_density_h_half(model, probe);
    const double edge = std::max(est.values[0], est.values[probe.size() - 1]);
    const double peak = est.values.maxCoeff();
    if (edge < 1e-12 * peak) break;
  }
  return uniform_grid(half, points);
}

namespace {

void check_same_grid(const DensityEstimate& a, const DensityEstimate& b) {
  if (a.grid.size() != b.grid.size() ||
      (a.grid - b.grid).abs().maxCoeff() > 1e-12 * std::max(1.0, a.grid.abs().maxCoeff()))
    throw std::invalid_argument("density distance: grids differ");
}

}  // namespace

double l1_distance(const DensityEstimate& a, const DensityEstimate& b) {
  check_same_grid(a, b);
  return trapezoid(a.grid, (a.values - b.values).abs());
}

double linf_distance(const DensityEstimate& a, const DensityEstimate& b) {
  check_same_grid(a, b);
  return (a.values - b.values).abs().maxCoeff();
}

void write_density_csv(const DensityEstimate& est, std::ostream& os,
                       const std::map<std::string, std::string>& provenance) {
  os << "# density";
  for (const auto& [k, v] : provenance) os << ' ' << k << '=' << v;
  os << "\n";
  os << "x,density\n";
  char buf[64];
  for (Eigen::Index i = 0; i < est.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", est.grid[i]);
    os << buf;
    std::snprintf(buf, sizeof buf, "%.17g", est.values[i]);
    os << ',' << buf << "\n";
  }
}

}  // namespace fsde
