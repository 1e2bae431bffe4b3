#include "fsde/euler.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace fsde {

void EulerConfig::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("euler: gamma must be positive");
  if (steps < 1) throw std::invalid_argument("euler: steps must be at least 1");
  if (initial_state.size() == 0)
    throw std::invalid_argument("euler: initial state must be non-empty");
  if (fine_refinement < 1)
    throw std::invalid_argument("euler: fine_refinement must be at least 1");
  if (thin < 1) throw std::invalid_argument("euler: thin must be at least 1");
}

const std::string& Trajectory::model_id() const {
  static const std::string kUnknown = "<detached>";
  return model ? model->name : kUnknown;
}

Eigen::VectorXd Trajectory::state_at_index(Eigen::Index k) const {
  if (k < 0 || k > steps) throw std::out_of_range("trajectory: grid index out of range");
  if (k % thin != 0)
    throw std::out_of_range("trajectory: grid index not stored under thinning");
  return grid_values.col(k / thin);
}

namespace {

// Shared by run_euler, value_at and euler_step so recomputations reproduce
// the stored states bit for bit. Order fixed: drift term added first.
inline void step_into(const CoefficientModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                      double dt, const Eigen::Ref<const Eigen::VectorXd>& db,
                      Eigen::VectorXd& drift_buf, Eigen::MatrixXd& diff_buf,
                      Eigen::VectorXd& out) {
  model.drift(x, drift_buf);
  model.diffusion(x, diff_buf);
  out = x + dt * drift_buf;
  out.noalias() += diff_buf * db;
}

}  // namespace

Eigen::VectorXd euler_step(const CoefficientModel& model,
                           const Eigen::Ref<const Eigen::VectorXd>& x, double gamma,
                           const Eigen::Ref<const Eigen::VectorXd>& noise_increment) {
  Eigen::VectorXd drift_buf(model.dim_state), out(model.dim_state);
  Eigen::MatrixXd diff_buf(model.dim_state, model.dim_noise);
  step_into(model, x, gamma, noise_increment, drift_buf, diff_buf, out);
  return out;
}

Trajectory run_euler(const CoefficientModel& model, const EulerConfig& config,
                     const FgnSequence& noise) {
  config.validate();
  const Eigen::Index d = model.dim_state;
  const Eigen::Index q = model.dim_noise;
  if (config.initial_state.size() != d)
    throw std::invalid_argument("euler: initial state dimension does not match the model");
  if (noise.dimension() != q)
    throw std::invalid_argument("euler: noise dimension does not match the model");
  const Eigen::Index m = config.fine_refinement;
  const double fine_step = config.gamma / static_cast<double>(m);
  if (std::abs(noise.config.step - fine_step) > 1e-9 * config.gamma)
    throw std::invalid_argument("euler: noise step is not gamma / fine_refinement");
  if (noise.increments.cols() < config.steps * m)
    throw std::invalid_argument("euler: noise holds fewer increments than steps require");

  Trajectory traj;
  traj.gamma = config.gamma;
  traj.steps = config.steps;
  traj.thin = config.thin;
  traj.model = std::make_shared<CoefficientModel>(model);
  traj.fine_refinement = m;
  if (config.keep_noise) {
    traj.noise = std::make_shared<FgnSequence>(noise);
    traj.noise_path = std::make_shared<Eigen::MatrixXd>(cumulate(*traj.noise));
  }

  const Eigen::Index stored = config.steps / config.thin + 1;
  traj.grid_values.resize(d, stored);
  traj.grid_values.col(0) = config.initial_state;

  Eigen::VectorXd x = config.initial_state;
  Eigen::VectorXd next(d), drift_buf(d), db(q);
  Eigen::MatrixXd diff_buf(d, q);
  for (Eigen::Index k = 0; k < config.steps; ++k) {
    for (Eigen::Index j = 0; j < q; ++j) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) s += noise.increments(j, k * m + i);
      db[j] = s;
    }
    step_into(model, x, config.gamma, db, drift_buf, diff_buf, next);
    if (!next.allFinite()) {
      std::ostringstream msg;
      msg << "euler: non-finite state at step " << k + 1
          << " (t = " << config.gamma * static_cast<double>(k + 1) << ")";
      throw BlowUpError(msg.str(), k + 1);
    }
    x.swap(next);
    if ((k + 1) % config.thin == 0) traj.grid_values.col((k + 1) / config.thin) = x;
  }
  return traj;
}

Eigen::VectorXd value_at(const Trajectory& traj, double t) {
  if (!(t >= 0.0) || t > traj.horizon() * (1.0 + 1e-12))
    throw std::out_of_range("value_at: t outside [0, horizon]");
  if (traj.thin != 1)
    throw std::invalid_argument("value_at: trajectory was thinned, grid states missing");
  const double gamma = traj.gamma;
  Eigen::Index k = static_cast<Eigen::Index>(std::floor(t / gamma));
  if (k >= traj.steps) k = traj.steps - 1;
  const double tk = gamma * static_cast<double>(k);
  if (t == tk) return traj.grid_values.col(k);
  if (t >= traj.horizon()) return traj.grid_values.col(traj.steps);

  if (!traj.model) throw std::invalid_argument("value_at: trajectory carries no model");
  if (!traj.noise_path)
    throw std::invalid_argument("value_at: trajectory carries no driving noise path");
  const CoefficientModel& model = *traj.model;
  const Eigen::MatrixXd& path = *traj.noise_path;
  const double fine_step = gamma / static_cast<double>(traj.fine_refinement);
  const Eigen::Index last_fine = path.cols() - 1;

  const double pos = t / fine_step;
  Eigen::Index f = static_cast<Eigen::Index>(std::floor(pos));
  if (f >= last_fine) f = last_fine - 1;
  const double frac = pos - static_cast<double>(f);
  Eigen::VectorXd b_t =
      frac == 0.0 ? Eigen::VectorXd(path.col(f))
                  : Eigen::VectorXd(path.col(f) + frac * (path.col(f + 1) - path.col(f)));
  Eigen::VectorXd db = b_t - path.col(k * traj.fine_refinement);

  Eigen::VectorXd drift_buf(model.dim_state), out(model.dim_state);
  Eigen::MatrixXd diff_buf(model.dim_state, model.dim_noise);
  step_into(model, traj.grid_values.col(k), t - tk, db, drift_buf, diff_buf, out);
  return out;
}

Trajectory reference_solution(const CoefficientModel& model,
                              const Eigen::Ref<const Eigen::VectorXd>& x0, double horizon,
                              double fine_step, const FgnSequence& fine_noise) {
  if (!(fine_step > 0.0))
    throw std::invalid_argument("reference_solution: fine_step must be positive");
  const double ratio = horizon / fine_step;
  const Eigen::Index steps = static_cast<Eigen::Index>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9)
    throw std::invalid_argument("reference_solution: fine_step must divide the horizon");
  EulerConfig cfg;
  cfg.gamma = fine_step;
  cfg.steps = steps;
  cfg.initial_state = x0;
  return run_euler(model, cfg, fine_noise);
}

FgnSequence aggregate_increments(const FgnSequence& fine, Eigen::Index factor) {
  if (factor < 1) throw std::invalid_argument("aggregate_increments: factor must be >= 1");
  if (factor == 1) return fine;
  const Eigen::Index coarse_count = fine.increments.cols() / factor;
  if (coarse_count < 1)
    throw std::invalid_argument("aggregate_increments: too few increments to aggregate");
  FgnSequence coarse;
  coarse.config = fine.config;
  coarse.config.step = fine.config.step * static_cast<double>(factor);
  coarse.config.count = coarse_count;
  coarse.increments.resize(fine.dimension(), coarse_count);
  for (Eigen::Index j = 0; j < fine.dimension(); ++j)
    for (Eigen::Index k = 0; k < coarse_count; ++k) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < factor; ++i) s += fine.increments(j, k * factor + i);
      coarse.increments(j, k) = s;
    }
  return coarse;
}

FgnSequence slice_fgn(const FgnSequence& seq, Eigen::Index offset, Eigen::Index count) {
  if (offset < 0 || count < 1 || offset + count > seq.increments.cols())
    throw std::invalid_argument("slice_fgn: slice outside the sequence");
  FgnSequence out;
  out.config = seq.config;
  out.config.count = count;
  out.increments = seq.increments.middleCols(offset, count);
  return out;
}

Trajectory restrict_to_stride(const Trajectory& traj, Eigen::Index stride) {
  if (stride < 1) throw std::invalid_argument("restrict_to_stride: stride must be >= 1");
  if (traj.thin != 1)
    throw std::invalid_argument("restrict_to_stride: trajectory already thinned");
  Trajectory out;
  out.gamma = traj.gamma * static_cast<double>(stride);
  out.steps = traj.steps / stride;
  out.thin = 1;
  out.model = traj.model;
  out.fine_refinement = traj.fine_refinement * stride;
  out.noise = traj.noise;
  out.noise_path = traj.noise_path;
  out.grid_values.resize(traj.dim(), out.steps + 1);
  for (Eigen::Index k = 0; k <= out.steps; ++k)
    out.grid_values.col(k) = traj.grid_values.col(k * stride);
  return out;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os, Eigen::Index stride) {
  if (stride < 1) throw std::invalid_argument("write_trajectory_csv: stride must be >= 1");
  os << "# trajectory model=" << traj.model_id() << " gamma=" << traj.gamma
     << " steps=" << traj.steps << " thin=" << traj.thin * stride;
  if (traj.noise) os << " H=" << traj.noise->config.hurst << " seed=" << traj.noise->config.seed;
  os << "\n";
  os << "t";
  for (Eigen::Index r = 0; r < traj.dim(); ++r) os << ",x_" << r + 1;
  os << "\n";
  char buf[64];
  for (Eigen::Index c = 0; c < traj.stored_count(); c += stride) {
    const double t = traj.gamma * static_cast<double>(c * traj.thin);
    std::snprintf(buf, sizeof buf, "%.17g", t);
    os << buf;
    for (Eigen::Index r = 0; r < traj.dim(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g", traj.grid_values(r, c));
      os << ',' << buf;
    }
    os << "\n";
  }
}

}  // namespace fsde
