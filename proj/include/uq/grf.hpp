#ifndef UQ_GRF_HPP
#define UQ_GRF_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uq::grf {

// Principal hyperparameter directions, in the fixed order used everywhere
// (FIM rows, screening indices, report columns).
enum class Param : int { mu = 0, sigma2 = 1, ell = 2, tau2 = 3 };

inline constexpr std::array<const char*, 4> kParamNames{"mu", "sigma2", "ell", "tau2"};

Param param_from_name(const std::string& name);

// Geostatistical hyperparameters of the stationary log-conductivity field:
// mean mu, sill sigma2, correlation length ell, nugget tau2.
struct HyperParams {
  double mu = 0.0;
  double sigma2 = 1.0;
  double ell = 1.0;
  double tau2 = 0.0;

  // Throws ParameterError unless sigma2 >= 0, tau2 >= 0, ell > 0 and
  // sigma2 + tau2 > 0.
  void validate() const;

  double component(Param p) const;
  HyperParams with_component(Param p, double value) const;
  // theta + eps * e_p, validated; the error message names the direction.
  HyperParams perturbed(Param p, double eps) const;
};

// Uniform 1D grid of cell centers on [lo, hi].
struct Grid {
  int n = 0;
  double lo = 0.0;
  double hi = 1.0;
  double spacing = 0.0;
  std::vector<double> points;

  static Grid cell_centers(int n, double lo = 0.0, double hi = 1.0);
  // Checks n >= 2 and strict uniform increase within 1e-12 relative tolerance.
  void validate() const;
};

// Multivariate Gaussian for the log-conductivity on a grid. Immutable once
// factorized; safe to share across concurrent samplers.
struct GaussianModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd chol;      // lower triangular; empty until factorize()
  double jitter_used = 0.0;  // diagonal shift needed by the factorization

  bool factorized() const { return chol.size() != 0; }
  int dim() const { return static_cast<int>(mean.size()); }
};

// One realization of the field: log values and their exponentials.
struct FieldSample {
  Eigen::VectorXd log_values;
  Eigen::VectorXd values;  // values[i] = exp(log_values[i])
  std::uint64_t seed = 0;
};

// Analytic derivatives of (mean, cov) with respect to each hyperparameter,
// indexed by Param.
struct CovDerivatives {
  std::array<Eigen::VectorXd, 4> dmean;
  std::array<Eigen::MatrixXd, 4> dcov;
};

// Squared-exponential-plus-nugget covariance at arbitrary locations:
//   C(r) = sigma2 * exp(-(r / (sqrt(2) ell))^2)  for r > 0,
//   C(0) = sigma2 + tau2.
Eigen::MatrixXd covariance_at(std::span<const double> points, const HyperParams& params);

GaussianModel build_covariance(const Grid& grid, const HyperParams& params);

// Populates model.chol with a lower factor of cov + jitter_used * I.
// jitter_used = 0 when plain Cholesky succeeds; otherwise the first value
// of eps * mean(diag(cov)), eps in {1e-12, 1e-10, 1e-8, 1e-6}, that works.
// Throws SingularError when even the largest jitter fails.
void factorize(GaussianModel& model);

// model.mean + chol * z with z standard normal drawn from the stream keyed
// by `seed`. Pure in (model, seed). Throws StateError if unfactorized.
FieldSample sample_log_field(const GaussianModel& model, std::uint64_t seed);

CovDerivatives cov_derivatives(const Grid& grid, const HyperParams& params);

}  // namespace uq::grf

#endif  // UQ_GRF_HPP
