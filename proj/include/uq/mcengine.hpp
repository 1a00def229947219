#ifndef UQ_MCENGINE_HPP
#define UQ_MCENGINE_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uq/fem1d.hpp"
#include "uq/grf.hpp"
#include "uq/infodiv.hpp"

namespace uq::mc {

// Scalar map applied to the solution value at eval_point.
struct GoalFunctional {
  enum class Kind { threshold_indicator, interval_indicator, clipped_value, scaled_value };

  Kind kind = Kind::threshold_indicator;
  std::string name;
  double eval_point = 1.0;
  double threshold = 0.0;  // threshold_indicator: 1{u > threshold}
  double lo = 0.0;         // interval_indicator: 1{lo < u < hi}
  double hi = 0.0;
  double cutoff = 0.0;     // clipped_value: min(u, cutoff)
  double scale = 1.0;      // scaled_value: u / scale
  // Optional certified lower bound of the mapped observable (e.g. 0 for a
  // clipped value of a nonnegative solution).
  std::optional<double> lower_bound_override;

  double apply(double u) const;
  // (lower, upper) support of the mapped observable: [0,1] for indicators,
  // upper = cutoff for clipped values, none for scaled values.
  std::pair<std::optional<double>, std::optional<double>> value_bounds() const;
  void validate() const;
};

const char* goal_kind_name(GoalFunctional::Kind k);
GoalFunctional::Kind goal_kind_from_name(const std::string& name);

// Monte Carlo protocol: M samples per run, `runs` repetitions, a global
// seed, the conductivity grid size and FEM refinement, the nominal model,
// and the goal functionals under study.
struct RunConfig {
  int samples = 1000;  // M
  int runs = 1;
  std::uint64_t seed = 0;
  int grid_n = 64;
  int mesh_multiplier = 2;  // FEM elements per conductivity cell
  double domain_lo = 0.0;
  double domain_hi = 1.0;
  double flux_bc = 1.0;
  grf::HyperParams nominal;
  std::vector<GoalFunctional> goals;
  bool common_random_numbers = false;
  int threads = 0;  // 0 = hardware concurrency; UQ_THREADS caps either way

  void validate() const;
  grf::Grid grid() const;
  fem1d::Mesh mesh() const;
};

// Seed-stream tags keeping nominal, alternative, and calibration sampling
// independent.
inline constexpr std::uint64_t kNominalStream = 0;
inline constexpr std::uint64_t kAlternativeStream = 1;
inline constexpr std::uint64_t kCalibrationStream = 2;

// Runs `count` iterations of fn(i) over a worker pool. Deterministic output
// is up to the caller (work must be indexed); exceptions propagate.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

// Resolved worker count: `requested` or hardware concurrency, capped by the
// UQ_THREADS environment variable when set.
int resolve_threads(int requested);

// One run of PDE solves under `model`: sample k uses the field seed
// derive(seed, stream, run_index, k). Returns the solution evaluated at
// each goal's eval_point, indexed [goal][k].
std::vector<std::vector<double>> sample_goal_points(const grf::GaussianModel& model,
                                                    const RunConfig& config, int run_index,
                                                    std::uint64_t stream);

// M draws of the marginal performance measure for one goal, with the
// observable's support bounds attached.
infodiv::ObservableSamples sample_observable(const grf::GaussianModel& model,
                                             const GoalFunctional& goal,
                                             const RunConfig& config, int run_index,
                                             std::uint64_t stream = kNominalStream);

// scale * (sample mean under alternative - sample mean under nominal),
// with independent seed streams unless common random numbers are on.
double weak_error_fd(const grf::GaussianModel& nominal, const grf::GaussianModel& alternative,
                     const GoalFunctional& goal, const RunConfig& config, double scale,
                     int run_index = 0);

// One run's bounds and reference for one (goal, epsilon).
struct SensitivityCell {
  double xi_minus = 0.0;  // scaled by theta_i / eps
  double xi_plus = 0.0;
  double fd = 0.0;
  double c_star_minus = 0.0;
  double c_star_plus = 0.0;
  double est_var = 0.0;  // predicted sampling variance of the upper bound
  bool boundary_hit = false;
};

struct SensitivitySummary {
  double mean = 0.0;
  double sd = 0.0;
};

struct SensitivityEpsResult {
  double epsilon = 0.0;
  double rho = 0.0;    // exact relative entropy of the perturbed model
  double scale = 0.0;  // theta_i / eps applied to bounds and reference
  std::vector<SensitivityCell> cells;  // one per run
  SensitivitySummary xi_minus, xi_plus, fd;
};

struct SensitivityGoalResult {
  std::string goal_name;
  infodiv::BoundMethod method = infodiv::BoundMethod::sampled;
  std::vector<SensitivityEpsResult> by_epsilon;
};

struct SensitivityResult {
  grf::Param direction;
  double theta_component = 0.0;
  std::vector<SensitivityGoalResult> goals;
};

// Divergence bounds, finite-difference references, and relative entropies
// for perturbations theta + eps e_direction, all goals in the config.
// Nominal samples are drawn once per run and reused across epsilons.
SensitivityResult sensitivity_experiment(const RunConfig& config, grf::Param direction,
                                         std::span<const double> epsilons,
                                         bool use_concentration = false);

struct ScreeningResult {
  Eigen::Matrix4d fim;
  std::array<double, 4> j{};        // indexed by Param
  std::array<bool, 4> clamped{};    // FIM diagonal clamped at zero
};

// Screening indices for the four principal directions. Takes only the grid
// and hyperparameters, so it cannot perform PDE solves by construction.
ScreeningResult screening_report(const grf::Grid& grid, const grf::HyperParams& params);

// Smallest eps > 0 whose perturbation reaches the target relative entropy,
// found by bracketing and bisection on the analytic Gaussian formula.
double epsilon_for_budget(const grf::Grid& grid, const grf::HyperParams& params,
                          grf::Param direction, double rho_target);

}  // namespace uq::mc

#endif  // UQ_MCENGINE_HPP
