#ifndef UQ_INFODIV_HPP
#define UQ_INFODIV_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "uq/grf.hpp"

namespace uq::infodiv {

// M draws of the marginal performance measure under the nominal model.
// mean is the sample mean, variance the unbiased sample variance; optional
// bounds certify the support of the observable.
struct ObservableSamples {
  std::vector<double> values;
  double mean = 0.0;
  double variance = 0.0;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;

  static ObservableSamples from_values(std::vector<double> values,
                                       std::optional<double> lower = std::nullopt,
                                       std::optional<double> upper = std::nullopt);
  std::size_t size() const { return values.size(); }
  // Recomputes mean/variance and re-checks bounds; throws on mismatch.
  void check_consistent() const;
};

enum class BoundMethod { sampled, bennett, bennett_ab, failure_closed_form, linearized };
enum class Side { lower, upper };

const char* bound_method_name(BoundMethod m);

// A computed divergence bound. One-sided constructors leave the other side
// at zero; two_sided() merges both.
struct DivergenceBound {
  double xi_minus = 0.0;
  double xi_plus = 0.0;
  double c_star_minus = 0.0;
  double c_star_plus = 0.0;
  double rho = 0.0;
  BoundMethod method = BoundMethod::sampled;
  // Set when the optimizer could not bracket an interior minimum and the
  // boundary evaluation was returned instead.
  bool boundary_hit = false;
};

// Closed-form Gaussian relative entropy with its constituent terms:
// value = (logdet_nom - logdet_alt + trace + mahalanobis - dim) / 2.
struct RelEntropyResult {
  double value = 0.0;
  std::pair<double, double> logdet_terms;  // (alt, nom)
  double trace_term = 0.0;
  double mahalanobis_term = 0.0;
  int dimension = 0;
};

// Cumulant of a centered observable, as seen by the bound optimizer.
// Implementations supply Lambda(c) with two derivatives plus the largest c
// at which evaluation stays representable.
class ScalarCumulant {
 public:
  virtual ~ScalarCumulant() = default;
  virtual double lambda(double c) const = 0;  // Lambda(c); Lambda(0) := 0
  virtual void derivs(double c, double& value, double& d1, double& d2) const = 0;
  virtual double c_max() const = 0;
  virtual bool degenerate() const { return false; }
};

// Weighted empirical cumulant,
//   Lambda(c) = (1/c) log sum_i w_i exp(c h_i),
// evaluated with a log-sum-exp shift. Covers the sampled estimator
// (uniform weights), the two-point indicator closed form, and both Bennett
// bounds (which are two-point cumulants).
class CumulantModel final : public ScalarCumulant {
 public:
  // `centered` must have zero weighted mean; zero-weight atoms are dropped.
  explicit CumulantModel(std::vector<double> centered, std::vector<double> weights = {});

  static CumulantModel from_samples(const ObservableSamples& samples, Side side);
  static CumulantModel indicator(double p, Side side);
  static CumulantModel bennett(double spread_above_mean, double variance);
  static CumulantModel bennett_ab(double mean, double lower, double upper);

  double lambda(double c) const override;
  void derivs(double c, double& value, double& d1, double& d2) const override;
  double c_max() const override;
  bool degenerate() const override { return points_.empty() || max_h_ <= 0.0; }

  double max_centered() const { return max_h_; }
  double variance() const { return variance_; }

 private:
  std::vector<std::pair<double, double>> points_;  // (h_i, w_i)
  double max_h_ = 0.0;
  double variance_ = 0.0;
};

struct XiMinimizeResult {
  double c_star = 0.0;
  double xi = 0.0;
  bool boundary_hit = false;
  int iterations = 0;
};

// Minimizes xi(c) = Lambda(c) + rho/c over c in [c_min, model.c_max()] by
// bracketing plus safeguarded Newton on dxi/dc, golden-section fallback.
XiMinimizeResult minimize_xi(const ScalarCumulant& model, double rho, double c_init,
                             double c_min = 1e-8);

// R(alt | nom) for Gaussians via Cholesky log-determinants, triangular
// solves for the trace, and the Mahalanobis term. Models are factorized on
// the fly when needed. For lognormal fields pass the log-conductivity
// Gaussians (relative entropy is invariant under the exp transform).
RelEntropyResult relative_entropy_gaussian(const grf::GaussianModel& alt,
                                           const grf::GaussianModel& nom);

// Fisher information of the log-field Gaussian in the hyperparameters:
// I_ij = dmu_i' Sigma^-1 dmu_j + tr(Sigma^-1 dSigma_i Sigma^-1 dSigma_j)/2.
Eigen::Matrix4d fim_gaussian(const grf::Grid& grid, const grf::HyperParams& params);

// J = theta_i * sqrt(fim_ii); a numerically negative diagonal is clamped
// to zero and reported through `clamped`.
double screening_index(const grf::HyperParams& params, const Eigen::Matrix4d& fim,
                       grf::Param direction, bool* clamped = nullptr);

// (1/c) log E_M[exp(c (H - mean))]; c = 0 returns the limit 0.
double cumulant_estimator(const ObservableSamples& samples, double c);

// First-order optimal c as a function of the budget: sqrt(2 rho / variance).
double optimal_c_init(double variance, double rho);

// Leading term of the divergence in the budget: sqrt(variance) sqrt(2 rho).
double xi_linearized(double variance, double rho);

// One side of the divergence bound from sampled cumulants.
DivergenceBound xi_bound(const ObservableSamples& samples, double rho, Side side);
DivergenceBound xi_bound_two_sided(const ObservableSamples& samples, double rho);

// Bracket for the failure probability under any alternative model within
// relative-entropy budget rho of the nominal, given nominal p; clamped to
// [0, 1].
std::pair<double, double> failure_prob_interval(double p, double rho);

// Moment inputs for the concentration bounds, decoupled from the sample
// container so closed-form moments can be supplied directly.
struct BoundedMoments {
  double mean = 0.0;
  double variance = 0.0;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;

  static BoundedMoments of(const ObservableSamples& samples);
};

// Bennett bound on the centered cumulant for an observable bounded above.
double bennett_bound(const BoundedMoments& moments, double c);
double bennett_bound(const ObservableSamples& samples, double c);

// Bennett bound for an observable supported on [a, b]; valid for any real c.
double bennett_ab_bound(const BoundedMoments& moments, double c);
double bennett_ab_bound(const ObservableSamples& samples, double c);

enum class ConcentrationVariant { bennett, bennett_ab };

// One side of the divergence bound with the cumulant replaced by a
// concentration inequality; same optimizer as xi_bound.
DivergenceBound concentration_xi(const BoundedMoments& moments, double rho,
                                 ConcentrationVariant variant, Side side);
DivergenceBound concentration_xi(const ObservableSamples& samples, double rho,
                                 ConcentrationVariant variant, Side side);

// Delta-method variance of the sampled upper bound at fixed c*:
// Var[e^{c* H}] / (c*^2 M E[e^{c* H}]^2), estimated from the samples with
// population moments of the centered exponential.
double estimator_variance(const ObservableSamples& samples, double c_star, std::size_t M);

}  // namespace uq::infodiv

#endif  // UQ_INFODIV_HPP
