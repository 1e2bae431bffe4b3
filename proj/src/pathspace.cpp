#include "fsde/pathspace.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fsde {

void SampledPath::validate() const {
  if (times.size() != values.cols())
    throw std::invalid_argument("path: times and values lengths differ");
  if (times.size() == 0) throw std::invalid_argument("path: empty");
  for (Eigen::Index i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("path: times must be strictly increasing");
}

SampledPath make_uniform_path(double t0, double step, Eigen::MatrixXd values) {
  if (!(step > 0.0)) throw std::invalid_argument("path: step must be positive");
  SampledPath p;
  p.times.resize(values.cols());
  for (Eigen::Index i = 0; i < values.cols(); ++i)
    p.times[i] = t0 + step * static_cast<double>(i);
  p.values = std::move(values);
  p.uniform_step = step;
  return p;
}

namespace {

struct PairMax {
  double ratio = 0.0;
  Eigen::Index i = 0;
  Eigen::Index j = 0;
};

// Exact scan of sampled pairs (i, j), i0 <= i < j <= i1, v - u <= delta.
template <class TimeFn>
void exact_scan(const Eigen::Ref<const Eigen::MatrixXd>& vals, TimeFn time, double theta,
                Eigen::Index i0, Eigen::Index i1, double delta, PairMax& best) {
  for (Eigen::Index i = i0; i < i1; ++i) {
    const double ti = time(i);
    for (Eigen::Index j = i + 1; j <= i1; ++j) {
      const double dt = time(j) - ti;
      if (dt > delta) break;
      const double ratio = (vals.col(j) - vals.col(i)).norm() / std::pow(dt, theta);
      if (ratio > best.ratio) best = {ratio, i, j};
    }
  }
}

// Branch and bound over index blocks. Upper bounds come from per-coordinate
// bounding boxes and the minimal time gap between blocks; the recursion only
// ever produces identical or disjoint range pairs, so every sampled pair is
// visited exactly once or pruned with a bound certifying it cannot win.
template <class TimeFn>
class HolderPruner {
public:
  HolderPruner(const Eigen::Ref<const Eigen::MatrixXd>& vals, TimeFn time, double theta,
               Eigen::Index i0, Eigen::Index i1, double delta)
      : vals_(vals), time_(time), theta_(theta), i0_(i0), i1_(i1), delta_(delta) {
    const Eigen::Index n = i1 - i0 + 1;
    nblocks_ = (n + kBlock - 1) / kBlock;
    const Eigen::Index d = vals.rows();
    lo_.resize(d, nblocks_);
    hi_.resize(d, nblocks_);
    for (Eigen::Index b = 0; b < nblocks_; ++b) {
      const auto [s, e] = block_range(b);
      lo_.col(b) = vals_.col(s);
      hi_.col(b) = vals_.col(s);
      for (Eigen::Index k = s + 1; k <= e; ++k) {
        lo_.col(b) = lo_.col(b).cwiseMin(vals_.col(k));
        hi_.col(b) = hi_.col(b).cwiseMax(vals_.col(k));
      }
    }
  }

  PairMax run() {
    PairMax best;
    // Adjacent pairs seed the incumbent; for rough paths the supremum sits
    // at small gaps, which makes the pruning bite early.
    for (Eigen::Index i = i0_; i < i1_; ++i) {
      const double dt = time_(i + 1) - time_(i);
      if (dt > delta_) continue;
      const double r = (vals_.col(i + 1) - vals_.col(i)).norm() / std::pow(dt, theta_);
      if (r > best.ratio) best = {r, i, i + 1};
    }
    recurse(0, nblocks_ - 1, 0, nblocks_ - 1, best);
    return best;
  }

private:
  static constexpr Eigen::Index kBlock = 64;

  std::pair<Eigen::Index, Eigen::Index> block_range(Eigen::Index b) const {
    const Eigen::Index s = i0_ + b * kBlock;
    const Eigen::Index e = std::min(i1_, s + kBlock - 1);
    return {s, e};
  }

  double box_distance(Eigen::Index al, Eigen::Index ah, Eigen::Index bl, Eigen::Index bh) const {
    double sq = 0.0;
    for (Eigen::Index r = 0; r < vals_.rows(); ++r) {
      double amin = lo_(r, al), amax = hi_(r, al);
      for (Eigen::Index b = al + 1; b <= ah; ++b) {
        amin = std::min(amin, lo_(r, b));
        amax = std::max(amax, hi_(r, b));
      }
      double bmin = lo_(r, bl), bmax = hi_(r, bl);
      for (Eigen::Index b = bl + 1; b <= bh; ++b) {
        bmin = std::min(bmin, lo_(r, b));
        bmax = std::max(bmax, hi_(r, b));
      }
      const double gap = std::max(std::abs(amax - bmin), std::abs(bmax - amin));
      sq += gap * gap;
    }
    return std::sqrt(sq);
  }

  void recurse(Eigen::Index al, Eigen::Index ah, Eigen::Index bl, Eigen::Index bh,
               PairMax& best) {
    const bool identical = (al == bl && ah == bh);
    if (!identical) {
      // Disjoint ranges: bl > ah by construction.
      const double min_gap = time_(block_range(bl).first) - time_(block_range(ah).second);
      if (min_gap > delta_) return;
      if (min_gap > 0.0) {
        const double ub = box_distance(al, ah, bl, bh) / std::pow(min_gap, theta_);
        if (ub <= best.ratio) return;
      }
    }
    if (identical && al == ah) {
      const auto [s, e] = block_range(al);
      exact_scan(vals_, time_, theta_, s, e, delta_, best);
      return;
    }
    if (!identical && al == ah && bl == bh) {
      const auto [as, ae] = block_range(al);
      const auto [bs, be] = block_range(bl);
      for (Eigen::Index i = as; i <= ae; ++i) {
        const double ti = time_(i);
        for (Eigen::Index j = bs; j <= be; ++j) {
          const double dt = time_(j) - ti;
          if (dt > delta_) break;
          const double ratio = (vals_.col(j) - vals_.col(i)).norm() / std::pow(dt, theta_);
          if (ratio > best.ratio) best = {ratio, i, j};
        }
      }
      return;
    }
    if (identical) {
      const Eigen::Index mid = (al + ah) / 2;
      recurse(al, mid, al, mid, best);
      recurse(mid + 1, ah, mid + 1, ah, best);
      recurse(al, mid, mid + 1, ah, best);
      return;
    }
    if (ah - al >= bh - bl) {
      const Eigen::Index mid = (al + ah) / 2;
      recurse(al, mid, bl, bh, best);
      recurse(mid + 1, ah, bl, bh, best);
    } else {
      const Eigen::Index mid = (bl + bh) / 2;
      recurse(al, ah, bl, mid, best);
      recurse(al, ah, mid + 1, bh, best);
    }
  }

  const Eigen::Ref<const Eigen::MatrixXd>& vals_;
  TimeFn time_;
  double theta_;
  Eigen::Index i0_, i1_;
  double delta_;
  Eigen::Index nblocks_;
  Eigen::MatrixXd lo_, hi_;
};

template <class TimeFn>
PairMax holder_core(const Eigen::Ref<const Eigen::MatrixXd>& vals, TimeFn time, double theta,
                    Eigen::Index i0, Eigen::Index i1, double delta, HolderMode mode) {
  PairMax best;
  if (i1 - i0 + 1 < 2) return best;  // 0/0 = 0 convention
  if (mode == HolderMode::kAuto)
    mode = (i1 - i0 + 1 <= 10'000) ? HolderMode::kExact : HolderMode::kPruned;
  if (mode == HolderMode::kExact) {
    exact_scan(vals, time, theta, i0, i1, delta, best);
    return best;
  }
  HolderPruner<TimeFn> pruner(vals, time, theta, i0, i1, delta);
  return pruner.run();
}

void check_theta(double theta) {
  if (!(theta > 0.0 && theta < 1.0))
    throw std::invalid_argument("holder: theta must lie in (0,1)");
}

// First index with times >= s and last with times <= t.
std::pair<Eigen::Index, Eigen::Index> locate(const Eigen::VectorXd& times, double s, double t) {
  if (!(s <= t)) throw std::invalid_argument("interval: s must not exceed t");
  const double eps = 1e-12 * std::max(1.0, std::max(std::abs(s), std::abs(t)));
  if (s < times[0] - eps || t > times[times.size() - 1] + eps)
    throw std::invalid_argument("interval: outside the sampled range");
  Eigen::Index i0 = 0;
  while (i0 < times.size() && times[i0] < s - eps) ++i0;
  Eigen::Index i1 = times.size() - 1;
  while (i1 >= 0 && times[i1] > t + eps) --i1;
  return {i0, i1};
}

}  // namespace

HolderReport holder_seminorm(const SampledPath& path, double theta, double s, double t,
                             HolderMode mode) {
  path.validate();
  check_theta(theta);
  const auto [i0, i1] = locate(path.times, s, t);
  HolderReport rep;
  rep.theta = theta;
  rep.interval_s = s;
  rep.interval_t = t;
  if (i1 <= i0) return rep;
  const auto& times = path.times;
  const PairMax best = holder_core(
      path.values, [&](Eigen::Index i) { return times[i]; }, theta, i0, i1,
      std::numeric_limits<double>::infinity(), mode);
  rep.seminorm = best.ratio;
  rep.argmax_u = times[best.i];
  rep.argmax_v = times[best.j];
  return rep;
}

double holder_modulus(const SampledPath& path, double theta, double T, double delta,
                      HolderMode mode) {
  path.validate();
  check_theta(theta);
  if (!(delta > 0.0)) throw std::invalid_argument("holder_modulus: delta must be positive");
  const auto [i0, i1] = locate(path.times, path.times[0], T);
  if (i1 <= i0) return 0.0;
  const auto& times = path.times;
  return holder_core(
             path.values, [&](Eigen::Index i) { return times[i]; }, theta, i0, i1, delta, mode)
      .ratio;
}

double holder_seminorm_value(const PathSegment& seg, double theta, HolderMode mode) {
  check_theta(theta);
  if (seg.size() < 2) return 0.0;
  const double step = seg.step;
  return holder_core(
             seg.values, [step](Eigen::Index i) { return step * static_cast<double>(i); },
             theta, 0, seg.size() - 1, std::numeric_limits<double>::infinity(), mode)
      .ratio;
}

double holder_modulus(const PathSegment& seg, double theta, double delta, HolderMode mode) {
  check_theta(theta);
  if (!(delta > 0.0)) throw std::invalid_argument("holder_modulus: delta must be positive");
  if (seg.size() < 2) return 0.0;
  const double step = seg.step;
  return holder_core(
             seg.values, [step](Eigen::Index i) { return step * static_cast<double>(i); },
             theta, 0, seg.size() - 1, delta, mode)
      .ratio;
}

double p_variation(const SampledPath& path, double p, double u, double v) {
  path.validate();
  if (!(p >= 1.0)) throw std::invalid_argument("p_variation: p must be >= 1");
  const auto [i0, i1] = locate(path.times, u, v);
  const Eigen::Index n = i1 - i0 + 1;
  if (n < 2) return 0.0;
  if (n > 10'001)
    throw std::invalid_argument("p_variation: interval holds more than 10^4 samples");
  // dp[j] = max over subdivisions ending at j of sum |increments|^p.
  std::vector<double> dp(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index j = 1; j < n; ++j) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double inc =
          std::pow((path.values.col(i0 + j) - path.values.col(i0 + i)).norm(), p);
      m = std::max(m, dp[static_cast<std::size_t>(i)] + inc);
    }
    dp[static_cast<std::size_t>(j)] = m;
  }
  return std::pow(dp[static_cast<std::size_t>(n - 1)], 1.0 / p);
}

double quadratic_functional(const SampledPath& path, double T) {
  path.validate();
  if (!path.uniform_step)
    throw std::invalid_argument("quadratic_functional: path grid is not uniform");
  const double gamma = *path.uniform_step;
  const double span = path.times[path.times.size() - 1] - path.times[0];
  if (T > span * (1.0 + 1e-12))
    throw std::invalid_argument("quadratic_functional: T exceeds the sampled range");
  const Eigen::Index k_max =
      static_cast<Eigen::Index>(std::floor(T / gamma * (1.0 + 1e-12)));
  double sum = 0.0;
  for (Eigen::Index k = 1; k <= k_max; ++k)
    sum += (path.values.col(k) - path.values.col(k - 1)).squaredNorm();
  return sum;
}

namespace {

Eigen::Index ratio_as_index(double num, double den, const char* what) {
  const double r = num / den;
  const Eigen::Index k = static_cast<Eigen::Index>(std::llround(r));
  if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-9)
    throw std::invalid_argument(what);
  return k;
}

}  // namespace

Eigen::VectorXd young_discrete_integral(const SampledPath& integrand,
                                        const SampledPath& driver, double gamma, double t) {
  integrand.validate();
  driver.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("young: gamma must be positive");
  if (driver.values.rows() != 1)
    throw std::invalid_argument("young: driver must be scalar");
  if (!driver.uniform_step || !integrand.uniform_step)
    throw std::invalid_argument("young: both paths must be uniformly sampled");
  if (driver.times[0] != 0.0 || integrand.times[0] != 0.0)
    throw std::invalid_argument("young: paths must start at time 0");
  const Eigen::Index rd = ratio_as_index(gamma, *driver.uniform_step,
                                         "young: driver grid does not refine gamma");
  const Eigen::Index ri = ratio_as_index(gamma, *integrand.uniform_step,
                                         "young: integrand grid does not refine gamma");
  const double t_end = driver.times[driver.times.size() - 1];
  if (t > t_end * (1.0 + 1e-12))
    throw std::invalid_argument("young: t exceeds the driver range");
  const double pos = t / *driver.uniform_step;
  const Eigen::Index t_idx = static_cast<Eigen::Index>(std::llround(pos));
  if (std::abs(pos - static_cast<double>(t_idx)) > 1e-9)
    throw std::invalid_argument("young: t is not a driver grid point");

  const Eigen::Index k_full = t_idx / rd;  // complete gamma intervals below t
  const Eigen::Index k_needed = (t_idx % rd == 0) ? k_full - 1 : k_full;
  if (k_needed * ri > integrand.values.cols() - 1)
    throw std::invalid_argument("young: integrand not sampled up to t");

  const Eigen::Index d = integrand.values.rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd comp = Eigen::VectorXd::Zero(d);
  auto add = [&](const Eigen::VectorXd& term) {
    for (Eigen::Index r = 0; r < d; ++r) {
      const double v = term[r];
      const double s = sum[r] + v;
      if (std::abs(sum[r]) >= std::abs(v))
        comp[r] += (sum[r] - s) + v;
      else
        comp[r] += (v - s) + sum[r];
      sum[r] = s;
    }
  };
  for (Eigen::Index k = 0; k < k_full; ++k) {
    const double db = driver.values(0, (k + 1) * rd) - driver.values(0, k * rd);
    add(integrand.values.col(k * ri) * db);
  }
  if (t_idx > k_full * rd) {  // partial increment up to t
    const double db = driver.values(0, t_idx) - driver.values(0, k_full * rd);
    add(integrand.values.col(k_full * ri) * db);
  }
  return sum + comp;
}

}  // namespace fsde
