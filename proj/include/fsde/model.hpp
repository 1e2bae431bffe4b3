#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace fsde {

// SDE coefficients dX = b(X) dt + sigma(X) dB^H. Callables must be pure,
// total on finite inputs and reentrant; the engine may evaluate them from
// several workers at once.
struct CoefficientModel {
  std::string name;
  Eigen::Index dim_state = 1;  // d
  Eigen::Index dim_noise = 1;  // q
  std::function<void(const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Ref<Eigen::VectorXd>)> drift;
  std::function<void(const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Ref<Eigen::MatrixXd>)> diffusion;
  double sigma_bound = 0.0;     // sup_x ||sigma(x)||
  double lipschitz_sigma = 0.0;

  Eigen::VectorXd drift_at(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd diffusion_at(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

// Lyapunov data for the dissipativity assumption
//   |b(x)|^2 <= V(x),   <grad V(x), b(x)> <= beta - alpha V(x),
// with V essentially quadratic. alpha and beta are declared, not inferred.
// Smoothness of sigma (the (1+alpha)-Lipschitz norm some limit theorems
// need) is documented, never sampled: Holder norms of derivatives are not
// reliably estimable pointwise.
struct LyapunovSpec {
  std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> value;
  std::function<void(const Eigen::Ref<const Eigen::VectorXd>&, Eigen::Ref<Eigen::VectorXd>)> gradient;
  double alpha = 1.0;
  double beta = 0.0;
  double hessian_bound = 0.0;

  Eigen::VectorXd gradient_at(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct ModelBundle {
  CoefficientModel model;
  LyapunovSpec lyapunov;
};

// Report-style result of sampling-based validation. `pass` iff no sampled
// point violates the inequality being checked.
struct CheckReport {
  bool pass = true;
  double max_violation = 0.0;        // worst margin above the allowed bound
  double max_ratio = 0.0;            // check-specific ratio at the worst point
  Eigen::VectorXd worst_point;
  std::vector<Eigen::Index> violating_indices;
};

// ||sigma(x)|| <= sigma_bound over the sample columns (spot-check of the
// declared bound).
CheckReport check_sigma_bound(const CoefficientModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& sample_points);

// |b(x)|^2 <= V(x) over the sample columns.
CheckReport check_drift_bound(const CoefficientModel& model, const LyapunovSpec& lyap,
                              const Eigen::Ref<const Eigen::MatrixXd>& sample_points);

// <grad V(x), b(x)> <= beta - alpha V(x) over the sample columns.
CheckReport check_dissipativity(const CoefficientModel& model, const LyapunovSpec& lyap,
                                const Eigen::Ref<const Eigen::MatrixXd>& sample_points);

// Central finite differences of V against the declared gradient; passes iff
// the max relative discrepancy is <= 1e-4 with steps scaled per coordinate.
CheckReport check_gradient(const LyapunovSpec& lyap,
                           const Eigen::Ref<const Eigen::MatrixXd>& sample_points,
                           double h = 1e-5);

// Default validation sample: d-dimensional box [-half_width, half_width],
// full grid with `per_axis` points for d <= 2, Latin hypercube beyond.
Eigen::MatrixXd validation_points(Eigen::Index dim, double half_width = 50.0,
                                  Eigen::Index per_axis = 1001, std::uint64_t seed = 0);

// dX = -X dt + (4 + cos X) dB^H with V(x) = 1 + x^2, alpha = beta = 2.
ModelBundle builtin_toy_model();

// dX = -lambda X dt + sigma0 dB^H (fractional Ornstein-Uhlenbeck).
ModelBundle builtin_fou_model(double lambda = 1.0, double sigma0 = 1.0);

// Name-keyed registry; `toy` and `fou` are pre-registered, further models
// are registered in code.
using ModelFactory = std::function<ModelBundle(const std::map<std::string, double>&)>;
void register_model(const std::string& name, ModelFactory factory);
ModelBundle make_model(const std::string& name, const std::map<std::string, double>& params = {});
std::vector<std::string> registered_models();

}  // namespace fsde
