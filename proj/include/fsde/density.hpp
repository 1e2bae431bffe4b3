#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "fsde/model.hpp"

namespace fsde {

// Gaussian convolution kernel written as
//   K_h(x) = exp(-x^2 / (2h)) / (sqrt(2 pi) h),
// with h NOT squared in the exponent: h plays the role of a variance-like
// bandwidth and the kernel's total mass is 1/sqrt(h), not 1. This verbatim
// form is the default; kStdDev reads h as a standard deviation instead and
// integrates to 1.
struct KernelSpec {
  enum class Mode { kVarianceLike, kStdDev };

  double bandwidth = 0.2;
  Mode mode = Mode::kVarianceLike;

  void validate() const;
  double density(double x) const;
  double total_mass() const;        // integral of the kernel over R
  double effective_stddev() const;  // sqrt(h) or h
};

struct DensityEstimate {
  Eigen::ArrayXd grid;    // uniform, ascending
  Eigen::ArrayXd values;  // >= 0
  std::optional<double> bandwidth;  // none for the quadrature oracle
  double normalization = 0.0;       // trapezoid integral of values over the grid
  double mass_scale = 1.0;          // values / mass_scale integrate to 1 over R

  // Unit-mass copy (values divided by mass_scale); after it the trapezoid
  // integral equals 1 minus the mass lost outside the grid.
  DensityEstimate normalized() const;
};

double trapezoid(const Eigen::Ref<const Eigen::ArrayXd>& grid,
                 const Eigen::Ref<const Eigen::ArrayXd>& values);

// Kernel density estimate of the marginal occupation measure:
//   values[i] = (1/n) sum_k K_h(grid[i] - state_k).
// Direct summation while n * grid points <= 10^9; above that, sorted states
// with contributions truncated beyond 8 effective kernel standard deviations.
DensityEstimate kde(const Eigen::Ref<const Eigen::VectorXd>& states, const KernelSpec& kernel,
                    const Eigen::Ref<const Eigen::ArrayXd>& grid, int jobs = 1);

// Semi-explicit invariant density of the one-dimensional diffusion (H = 1/2):
//   m(x) = sigma(x)^{-2} exp( int_0^x 2 b(u) / sigma(u)^2 du ),
// normalized by its trapezoid integral over the grid. The inner integral is
// a cumulative composite Simpson sweep with the given substep.
DensityEstimate oracle_density_h_half(const CoefficientModel& model,
                                      const Eigen::Ref<const Eigen::ArrayXd>& grid,
                                      double quad_step = 1e-3);

// Default grids: 2^10 + 1 points over [-L, L].
Eigen::ArrayXd uniform_grid(double half_width, Eigen::Index points = 1025);
// L = 6 sample standard deviations.
Eigen::ArrayXd default_kde_grid(const Eigen::Ref<const Eigen::VectorXd>& states,
                                Eigen::Index points = 1025);
// L grown until the unnormalized speed-measure integrand drops below 1e-12.
Eigen::ArrayXd default_oracle_grid(const CoefficientModel& model, Eigen::Index points = 1025);

// Trapezoid distances on identical grids.
double l1_distance(const DensityEstimate& a, const DensityEstimate& b);
double linf_distance(const DensityEstimate& a, const DensityEstimate& b);

// CSV: columns x, density; `#` header lines carry the provenance entries.
void write_density_csv(const DensityEstimate& est, std::ostream& os,
                       const std::map<std::string, std::string>& provenance = {});

}  // namespace fsde
