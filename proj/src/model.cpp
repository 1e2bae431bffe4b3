#include "fsde/model.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "fsde/rng.hpp"

namespace fsde {

Eigen::VectorXd CoefficientModel::drift_at(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd out(dim_state);
  drift(x, out);
  return out;
}

Eigen::MatrixXd CoefficientModel::diffusion_at(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::MatrixXd out(dim_state, dim_noise);
  diffusion(x, out);
  return out;
}

Eigen::VectorXd LyapunovSpec::gradient_at(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd out(x.size());
  gradient(x, out);
  return out;
}

namespace {

void require_samples(const Eigen::Ref<const Eigen::MatrixXd>& pts) {
  if (pts.cols() == 0) throw std::invalid_argument("validation: empty sample set");
}

// Inequalities that hold with equality must not flap on roundoff.
bool violates(double lhs, double rhs) {
  const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return lhs - rhs > 1e-9 * scale;
}

}  // namespace

CheckReport check_sigma_bound(const CoefficientModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& pts) {
  require_samples(pts);
  CheckReport rep;
  Eigen::MatrixXd s(model.dim_state, model.dim_noise);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const auto x = pts.col(i);
    model.diffusion(x, s);
    const double norm = s.norm();
    if (norm > rep.max_ratio * model.sigma_bound || rep.worst_point.size() == 0) {
      rep.max_ratio = model.sigma_bound > 0.0 ? norm / model.sigma_bound : norm;
      rep.max_violation = norm - model.sigma_bound;
      rep.worst_point = x;
    }
    if (violates(norm, model.sigma_bound)) {
      rep.pass = false;
      rep.violating_indices.push_back(i);
    }
  }
  return rep;
}

CheckReport check_drift_bound(const CoefficientModel& model, const LyapunovSpec& lyap,
                              const Eigen::Ref<const Eigen::MatrixXd>& pts) {
  require_samples(pts);
  CheckReport rep;
  Eigen::VectorXd b(model.dim_state);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const auto x = pts.col(i);
    model.drift(x, b);
    const double lhs = b.squaredNorm();
    const double v = lyap.value(x);
    const double ratio = lhs / v;
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.max_violation = lhs - v;
      rep.worst_point = x;
    }
    if (violates(lhs, v)) {
      rep.pass = false;
      rep.violating_indices.push_back(i);
    }
  }
  return rep;
}

CheckReport check_dissipativity(const CoefficientModel& model, const LyapunovSpec& lyap,
                                const Eigen::Ref<const Eigen::MatrixXd>& pts) {
  require_samples(pts);
  if (!(lyap.alpha > 0.0))
    throw std::invalid_argument("check_dissipativity: alpha must be positive");
  CheckReport rep;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd b(model.dim_state), g(model.dim_state);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const auto x = pts.col(i);
    model.drift(x, b);
    lyap.gradient(x, g);
    const double lhs = g.dot(b);
    const double rhs = lyap.beta - lyap.alpha * lyap.value(x);
    const double margin = lhs - rhs;
    if (margin > rep.max_violation) {
      rep.max_violation = margin;
      rep.max_ratio = rhs != 0.0 ? lhs / rhs : lhs;
      rep.worst_point = x;
    }
    if (violates(lhs, rhs)) {
      rep.pass = false;
      rep.violating_indices.push_back(i);
    }
  }
  return rep;
}

CheckReport check_gradient(const LyapunovSpec& lyap,
                           const Eigen::Ref<const Eigen::MatrixXd>& pts, double h) {
  require_samples(pts);
  if (!(h > 0.0)) throw std::invalid_argument("check_gradient: h must be positive");
  constexpr double kTolerance = 1e-4;
  CheckReport rep;
  const Eigen::Index d = pts.rows();
  Eigen::VectorXd g(d), xp(d), xm(d), fd(d);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const Eigen::VectorXd x = pts.col(i);
    lyap.gradient(x, g);
    for (Eigen::Index c = 0; c < d; ++c) {
      const double step = h * std::max(1.0, std::abs(x[c]));
      xp = x;
      xm = x;
      xp[c] += step;
      xm[c] -= step;
      fd[c] = (lyap.value(xp) - lyap.value(xm)) / (2.0 * step);
    }
    const double scale = std::max(g.norm(), 1.0);
    const double rel = (g - fd).norm() / scale;
    if (rel > rep.max_violation) {
      rep.max_violation = rel;
      rep.worst_point = x;
    }
    if (rel > kTolerance) {
      rep.pass = false;
      rep.violating_indices.push_back(i);
    }
  }
  rep.max_ratio = rep.max_violation / kTolerance;
  return rep;
}

Eigen::MatrixXd validation_points(Eigen::Index dim, double half_width,
                                  Eigen::Index per_axis, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("validation_points: dim must be positive");
  if (per_axis < 2) throw std::invalid_argument("validation_points: per_axis must be >= 2");
  if (dim <= 2) {
    const Eigen::Index n = dim == 1 ? per_axis : per_axis * per_axis;
    Eigen::MatrixXd pts(dim, n);
    const double step = 2.0 * half_width / static_cast<double>(per_axis - 1);
    if (dim == 1) {
      for (Eigen::Index i = 0; i < per_axis; ++i) pts(0, i) = -half_width + step * i;
    } else {
      Eigen::Index k = 0;
      for (Eigen::Index i = 0; i < per_axis; ++i)
        for (Eigen::Index j = 0; j < per_axis; ++j, ++k) {
          pts(0, k) = -half_width + step * i;
          pts(1, k) = -half_width + step * j;
        }
    }
    return pts;
  }
  // Latin hypercube: one stratified draw per cell and axis, then a per-axis
  // shuffle of the strata.
  const Eigen::Index n = per_axis;
  Eigen::MatrixXd pts(dim, n);
  Xoshiro256pp rng(sub_seed(seed, 0x1b5));
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < dim; ++a) {
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const Eigen::Index j =
          static_cast<Eigen::Index>(rng.next() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform01()) /
                       static_cast<double>(n);
      pts(a, i) = -half_width + 2.0 * half_width * u;
    }
  }
  return pts;
}

ModelBundle builtin_toy_model() {
  ModelBundle mb;
  mb.model.name = "toy";
  mb.model.dim_state = 1;
  mb.model.dim_noise = 1;
  mb.model.drift = [](const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) {
    out[0] = -x[0];
  };
  mb.model.diffusion = [](const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::Ref<Eigen::MatrixXd> out) {
    out(0, 0) = 4.0 + std::cos(x[0]);
  };
  mb.model.sigma_bound = 5.0;
  mb.model.lipschitz_sigma = 1.0;
  mb.lyapunov.value = [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return 1.0 + x.squaredNorm();
  };
  mb.lyapunov.gradient = [](const Eigen::Ref<const Eigen::VectorXd>& x,
                            Eigen::Ref<Eigen::VectorXd> out) { out = 2.0 * x; };
  mb.lyapunov.alpha = 2.0;
  mb.lyapunov.beta = 2.0;
  mb.lyapunov.hessian_bound = 2.0;
  return mb;
}

ModelBundle builtin_fou_model(double lambda, double sigma0) {
  if (!(lambda > 0.0)) throw std::invalid_argument("fou: lambda must be positive");
  if (!(sigma0 >= 0.0)) throw std::invalid_argument("fou: sigma0 must be nonnegative");
  ModelBundle mb;
  mb.model.name = "fou";
  mb.model.dim_state = 1;
  mb.model.dim_noise = 1;
  mb.model.drift = [lambda](const Eigen::Ref<const Eigen::VectorXd>& x,
                            Eigen::Ref<Eigen::VectorXd> out) { out[0] = -lambda * x[0]; };
  mb.model.diffusion = [sigma0](const Eigen::Ref<const Eigen::VectorXd>&,
                                Eigen::Ref<Eigen::MatrixXd> out) { out(0, 0) = sigma0; };
  mb.model.sigma_bound = sigma0;
  mb.model.lipschitz_sigma = 0.0;
  // V = 1 + lambda^2 |x|^2 gives |b|^2 <= V and dissipativity with equality.
  const double l2 = lambda * lambda;
  mb.lyapunov.value = [l2](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return 1.0 + l2 * x.squaredNorm();
  };
  mb.lyapunov.gradient = [l2](const Eigen::Ref<const Eigen::VectorXd>& x,
                              Eigen::Ref<Eigen::VectorXd> out) { out = 2.0 * l2 * x; };
  mb.lyapunov.alpha = 2.0 * lambda;
  mb.lyapunov.beta = 2.0 * lambda;
  mb.lyapunov.hessian_bound = 2.0 * l2;
  return mb;
}

namespace {

std::map<std::string, ModelFactory>& registry() {
  static std::map<std::string, ModelFactory> instance = [] {
    std::map<std::string, ModelFactory> r;
    r["toy"] = [](const std::map<std::string, double>&) { return builtin_toy_model(); };
    r["fou"] = [](const std::map<std::string, double>& params) {
      const double lambda = params.count("lambda") ? params.at("lambda") : 1.0;
      const double sigma0 = params.count("sigma0") ? params.at("sigma0") : 1.0;
      return builtin_fou_model(lambda, sigma0);
    };
    return r;
  }();
  return instance;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void register_model(const std::string& name, ModelFactory factory) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  registry()[name] = std::move(factory);
}

ModelBundle make_model(const std::string& name, const std::map<std::string, double>& params) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  auto it = registry().find(name);
  if (it == registry().end())
    throw std::invalid_argument("unknown model '" + name + "'");
  return it->second(params);
}

std::vector<std::string> registered_models() {
  std::lock_guard<std::mutex> lock(registry_mutex());
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

}  // namespace fsde
