#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "fsde/euler.hpp"
#include "fsde/pathspace.hpp"

namespace fsde {

// Occupation measures of an Euler trajectory: the window measure places unit
// mass 1/n on each shifted path stretch, the marginal measure on each grid
// state. Both are views; the referenced trajectory must outlive them.

struct MarginalOccupation {
  const Trajectory* trajectory = nullptr;
  Eigen::Index n = 0;
  Eigen::Index offset = 0;  // stored-column offset (burn-in)

  double gamma() const { return trajectory->gamma * static_cast<double>(trajectory->thin); }
  auto states() const { return trajectory->grid_values.middleCols(offset, n); }
  auto state(Eigen::Index k) const { return trajectory->grid_values.col(offset + k); }
};

struct OccupationMeasureView {
  const Trajectory* trajectory = nullptr;
  Eigen::Index n = 0;
  Eigen::Index offset = 0;       // grid-index offset (burn-in)
  double window_horizon = 0.0;   // T
  Eigen::Index window_len = 0;   // samples per atom

  double gamma() const { return trajectory->gamma; }
  PathSegment atom(Eigen::Index k) const {
    return PathSegment{0.0, trajectory->gamma,
                       trajectory->grid_values.middleCols(offset + k, window_len)};
  }
};

struct TimeAverageSeries {
  std::string functional_id;
  std::vector<Eigen::Index> checkpoints;
  Eigen::VectorXd partial_averages;
  Eigen::VectorXd batch_se;  // NaN where the prefix is too short to batch
};

using StateFunctional = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;
using PathFunctional = std::function<double(const PathSegment&)>;

// First n grid states, uniform weights. `burn_in` skips that many stored
// states first (0 honours the measure's definition; long-run estimates
// usually pass the configured burn-in).
MarginalOccupation marginal_occupation(const Trajectory& traj, Eigen::Index n,
                                       Eigen::Index burn_in = 0);

// n windows of horizon T: atom k is the path restricted to
// [(k-1) gamma, (k-1) gamma + T], lazily materialized.
OccupationMeasureView window_occupation(const Trajectory& traj, Eigen::Index n, double T,
                                        Eigen::Index burn_in = 0);

// Equal-weight average of F over atoms. Evaluation may be partitioned across
// workers; the reduction order is fixed, so results do not depend on `jobs`.
// Non-finite F values abort with the atom index.
double evaluate_functional(const MarginalOccupation& occ, const StateFunctional& F,
                           int jobs = 1);
double evaluate_functional(const OccupationMeasureView& occ, const PathFunctional& F,
                           int jobs = 1);

// Same averages with checkpointed partial means and batch-means standard
// errors along the way.
TimeAverageSeries evaluate_series(const MarginalOccupation& occ, const StateFunctional& F,
                                  std::vector<Eigen::Index> checkpoints,
                                  std::string functional_id, int jobs = 1,
                                  Eigen::Index batches = 30);
TimeAverageSeries evaluate_series(const OccupationMeasureView& occ, const PathFunctional& F,
                                  std::vector<Eigen::Index> checkpoints,
                                  std::string functional_id, int jobs = 1,
                                  Eigen::Index batches = 30);

// Partial averages of V^p along the grid (the long-time stability diagnostic).
TimeAverageSeries lyapunov_average(const Trajectory& traj, const LyapunovSpec& lyap, double p,
                                   std::vector<Eigen::Index> checkpoints,
                                   Eigen::Index burn_in = 0, int jobs = 1);

// Fraction of marginal states with |x| > threshold.
double tail_mass(const MarginalOccupation& marg, double threshold);

// CSV export of a series: columns m, average, batch_se.
void write_series_csv(const TimeAverageSeries& series, std::ostream& os);

}  // namespace fsde
