#include "fsde/ergodic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "fsde/parallel.hpp"
#include "fsde/stats.hpp"

namespace fsde {

MarginalOccupation marginal_occupation(const Trajectory& traj, Eigen::Index n,
                                       Eigen::Index burn_in) {
  if (n < 1) throw std::invalid_argument("marginal_occupation: n must be at least 1");
  if (burn_in < 0) throw std::invalid_argument("marginal_occupation: negative burn-in");
  if (burn_in + n > traj.stored_count())
    throw std::invalid_argument("marginal_occupation: n exceeds the stored states");
  return MarginalOccupation{&traj, n, burn_in};
}

OccupationMeasureView window_occupation(const Trajectory& traj, Eigen::Index n, double T,
                                        Eigen::Index burn_in) {
  if (n < 1) throw std::invalid_argument("window_occupation: n must be at least 1");
  if (!(T >= 0.0)) throw std::invalid_argument("window_occupation: negative horizon");
  if (traj.thin != 1)
    throw std::invalid_argument("window_occupation: trajectory was thinned");
  const Eigen::Index win_len =
      static_cast<Eigen::Index>(std::floor(T / traj.gamma * (1.0 + 1e-12))) + 1;
  if (burn_in + (n - 1) + (win_len - 1) > traj.steps)
    throw std::invalid_argument("window_occupation: trajectory horizon too short");
  return OccupationMeasureView{&traj, n, burn_in, T, win_len};
}

namespace {

// Evaluations land in a dense buffer (chunk boundaries fixed, writes
// disjoint), then a single compensated sweep builds the prefix averages.
template <class EvalFn>
Eigen::VectorXd evaluate_buffer(Eigen::Index n, int jobs, EvalFn eval) {
  Eigen::VectorXd buf(n);
  std::atomic<Eigen::Index> bad{-1};
  parallel_for_chunks(n, jobs, [&](Eigen::Index b, Eigen::Index e) {
    for (Eigen::Index k = b; k < e; ++k) {
      const double v = eval(k);
      if (!std::isfinite(v)) {
        Eigen::Index expected = -1;
        bad.compare_exchange_strong(expected, k);
        return;
      }
      buf[k] = v;
    }
  });
  if (bad.load() >= 0) {
    std::ostringstream msg;
    msg << "functional returned a non-finite value on atom " << bad.load();
    throw NumericalError(msg.str());
  }
  return buf;
}

double compensated_mean(const Eigen::Ref<const Eigen::VectorXd>& buf) {
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index k = 0; k < buf.size(); ++k) {
    const double v = buf[k];
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(buf.size());
}

TimeAverageSeries series_from_buffer(const Eigen::VectorXd& buf,
                                     std::vector<Eigen::Index> checkpoints,
                                     std::string functional_id, Eigen::Index batches) {
  const Eigen::Index n = buf.size();
  std::sort(checkpoints.begin(), checkpoints.end());
  for (Eigen::Index m : checkpoints)
    if (m < 1 || m > n)
      throw std::invalid_argument("series: checkpoint outside [1, n]");
  TimeAverageSeries s;
  s.functional_id = std::move(functional_id);
  s.checkpoints = std::move(checkpoints);
  s.partial_averages.resize(static_cast<Eigen::Index>(s.checkpoints.size()));
  s.batch_se.resize(static_cast<Eigen::Index>(s.checkpoints.size()));
  double sum = 0.0, comp = 0.0;
  Eigen::Index next = 0;
  for (Eigen::Index k = 0; k < n && next < static_cast<Eigen::Index>(s.checkpoints.size());
       ++k) {
    const double v = buf[k];
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
    while (next < static_cast<Eigen::Index>(s.checkpoints.size()) &&
           s.checkpoints[static_cast<std::size_t>(next)] == k + 1) {
      const Eigen::Index m = k + 1;
      s.partial_averages[next] = (sum + comp) / static_cast<double>(m);
      s.batch_se[next] = m >= 2 * batches
                             ? batch_means(buf.head(m), batches).se
                             : std::numeric_limits<double>::quiet_NaN();
      ++next;
    }
  }
  return s;
}

}  // namespace

double evaluate_functional(const MarginalOccupation& occ, const StateFunctional& F, int jobs) {
  const Eigen::VectorXd buf =
      evaluate_buffer(occ.n, jobs, [&](Eigen::Index k) { return F(occ.state(k)); });
  return compensated_mean(buf);
}

double evaluate_functional(const OccupationMeasureView& occ, const PathFunctional& F,
                           int jobs) {
  const Eigen::VectorXd buf =
      evaluate_buffer(occ.n, jobs, [&](Eigen::Index k) { return F(occ.atom(k)); });
  return compensated_mean(buf);
}

TimeAverageSeries evaluate_series(const MarginalOccupation& occ, const StateFunctional& F,
                                  std::vector<Eigen::Index> checkpoints,
                                  std::string functional_id, int jobs, Eigen::Index batches) {
  const Eigen::VectorXd buf =
      evaluate_buffer(occ.n, jobs, [&](Eigen::Index k) { return F(occ.state(k)); });
  return series_from_buffer(buf, std::move(checkpoints), std::move(functional_id), batches);
}

TimeAverageSeries evaluate_series(const OccupationMeasureView& occ, const PathFunctional& F,
                                  std::vector<Eigen::Index> checkpoints,
                                  std::string functional_id, int jobs, Eigen::Index batches) {
  const Eigen::VectorXd buf =
      evaluate_buffer(occ.n, jobs, [&](Eigen::Index k) { return F(occ.atom(k)); });
  return series_from_buffer(buf, std::move(checkpoints), std::move(functional_id), batches);
}

TimeAverageSeries lyapunov_average(const Trajectory& traj, const LyapunovSpec& lyap, double p,
                                   std::vector<Eigen::Index> checkpoints,
                                   Eigen::Index burn_in, int jobs) {
  if (!(p >= 1.0)) throw std::invalid_argument("lyapunov_average: p must be >= 1");
  if (checkpoints.empty())
    throw std::invalid_argument("lyapunov_average: need at least one checkpoint");
  const Eigen::Index n = *std::max_element(checkpoints.begin(), checkpoints.end());
  const MarginalOccupation occ = marginal_occupation(traj, n, burn_in);
  StateFunctional F = [&lyap, p](const Eigen::Ref<const Eigen::VectorXd>& x) {
    const double v = lyap.value(x);
    return p == 1.0 ? v : std::pow(v, p);
  };
  std::ostringstream id;
  id << "V^" << p;
  return evaluate_series(occ, F, std::move(checkpoints), id.str(), jobs);
}

double tail_mass(const MarginalOccupation& marg, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("tail_mass: threshold must be positive");
  Eigen::Index count = 0;
  for (Eigen::Index k = 0; k < marg.n; ++k)
    if (marg.state(k).norm() > threshold) ++count;
  return static_cast<double>(count) / static_cast<double>(marg.n);
}

void write_series_csv(const TimeAverageSeries& series, std::ostream& os) {
  os << "# time-average functional=" << series.functional_id << "\n";
  os << "m,average,batch_se\n";
  char buf[64];
  for (Eigen::Index i = 0; i < series.partial_averages.size(); ++i) {
    os << series.checkpoints[static_cast<std::size_t>(i)];
    std::snprintf(buf, sizeof buf, "%.17g", series.partial_averages[i]);
    os << ',' << buf;
    std::snprintf(buf, sizeof buf, "%.17g", series.batch_se[i]);
    os << ',' << buf << "\n";
  }
}

}  // namespace fsde
