#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <string>

#include "fsde/errors.hpp"
#include "fsde/fgn.hpp"
#include "fsde/model.hpp"

namespace fsde {

// Continuous-time Euler scheme with step gamma:
//   X_{t} = X_{k gamma} + (t - k gamma) b(X_{k gamma})
//                       + sigma(X_{k gamma}) (B_t - B_{k gamma}),
// for t in [k gamma, (k+1) gamma). Grid values follow the recursion exactly;
// between grid points the driving path is read off the fine noise grid.

struct EulerConfig {
  double gamma = 0.1;
  Eigen::Index steps = 0;
  Eigen::VectorXd initial_state;
  Eigen::Index fine_refinement = 1;  // m: driving noise sampled at step gamma/m
  Eigen::Index thin = 1;             // store every thin-th grid state
  bool keep_noise = true;            // retain increments + cumulative path (value_at needs them)

  void validate() const;
};

struct Trajectory {
  double gamma = 0.0;
  Eigen::Index steps = 0;
  Eigen::Index thin = 1;
  Eigen::MatrixXd grid_values;  // d x stored_count, columns at grid indices 0, thin, 2 thin, ...
  std::shared_ptr<const CoefficientModel> model;
  Eigen::Index fine_refinement = 1;
  std::shared_ptr<const FgnSequence> noise;            // driving increments at step gamma/m
  std::shared_ptr<const Eigen::MatrixXd> noise_path;   // cumulative fBm, q x (m steps + 1)

  Eigen::Index dim() const { return grid_values.rows(); }
  Eigen::Index stored_count() const { return grid_values.cols(); }
  double horizon() const { return gamma * static_cast<double>(steps); }
  const std::string& model_id() const;
  // Grid state at grid index k (requires thin == 1 or k divisible by thin).
  Eigen::VectorXd state_at_index(Eigen::Index k) const;
};

// One recursion step, in the fixed evaluation order (drift added first).
Eigen::VectorXd euler_step(const CoefficientModel& model,
                           const Eigen::Ref<const Eigen::VectorXd>& x, double gamma,
                           const Eigen::Ref<const Eigen::VectorXd>& noise_increment);

// Runs the scheme. The noise must hold at least steps * fine_refinement
// increments at step gamma / fine_refinement. Aborts with BlowUpError (and
// the step index) on the first non-finite state.
Trajectory run_euler(const CoefficientModel& model, const EulerConfig& config,
                     const FgnSequence& noise);

// Piecewise value at any t in [0, horizon]; off the fine grid the driving
// path is linearly interpolated between fine nodes (documented approximation).
Eigen::VectorXd value_at(const Trajectory& traj, double t);

// Same scheme at a (much) finer step on the same noise path; the usual
// reference for discretization-error ladders.
Trajectory reference_solution(const CoefficientModel& model,
                              const Eigen::Ref<const Eigen::VectorXd>& x0, double horizon,
                              double fine_step, const FgnSequence& fine_noise);

// Keeps one increment sequence per `factor` consecutive fine increments;
// coarse and fine runs then share the same underlying driving path.
FgnSequence aggregate_increments(const FgnSequence& fine, Eigen::Index factor);

// Contiguous sub-sequence of increments starting at `offset`.
FgnSequence slice_fgn(const FgnSequence& seq, Eigen::Index offset, Eigen::Index count);

// Trajectory restricted to every stride-th grid point (shared grid times).
Trajectory restrict_to_stride(const Trajectory& traj, Eigen::Index stride);

// CSV export: columns t, x_1..x_d, `#` provenance header, optional thinning.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os, Eigen::Index stride = 1);

}  // namespace fsde
