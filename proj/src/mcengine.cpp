#include "uq/mcengine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "uq/errors.hpp"
#include "uq/rng.hpp"

namespace uq::mc {

namespace {

double vector_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

SensitivitySummary summarize(std::span<const double> v) {
  SensitivitySummary s;
  s.mean = vector_mean(v);
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

}  // namespace

const char* goal_kind_name(GoalFunctional::Kind k) {
  switch (k) {
    case GoalFunctional::Kind::threshold_indicator: return "threshold_indicator";
    case GoalFunctional::Kind::interval_indicator: return "interval_indicator";
    case GoalFunctional::Kind::clipped_value: return "clipped_value";
    case GoalFunctional::Kind::scaled_value: return "scaled_value";
  }
  return "unknown";
}

GoalFunctional::Kind goal_kind_from_name(const std::string& name) {
  for (auto k : {GoalFunctional::Kind::threshold_indicator, GoalFunctional::Kind::interval_indicator,
                 GoalFunctional::Kind::clipped_value, GoalFunctional::Kind::scaled_value}) {
    if (name == goal_kind_name(k)) return k;
  }
  throw ParameterError("unknown goal functional kind '" + name + "'");
}

double GoalFunctional::apply(double u) const {
  switch (kind) {
    case Kind::threshold_indicator: return u > threshold ? 1.0 : 0.0;
    case Kind::interval_indicator: return (u > lo && u < hi) ? 1.0 : 0.0;
    case Kind::clipped_value: return std::min(u, cutoff);
    case Kind::scaled_value: return u / scale;
  }
  throw ParameterError("invalid goal functional kind");
}

std::pair<std::optional<double>, std::optional<double>> GoalFunctional::value_bounds() const {
  switch (kind) {
    case Kind::threshold_indicator:
    case Kind::interval_indicator:
      return {0.0, 1.0};
    case Kind::clipped_value:
      return {lower_bound_override, cutoff};
    case Kind::scaled_value:
      return {lower_bound_override, std::nullopt};
  }
  return {std::nullopt, std::nullopt};
}

void GoalFunctional::validate() const {
  if (kind == Kind::interval_indicator && !(lo < hi))
    throw ParameterError("interval indicator needs lo < hi");
  if (kind == Kind::scaled_value && scale == 0.0)
    throw ParameterError("scaled value needs a nonzero scale");
  if (kind == Kind::clipped_value && lower_bound_override && !(*lower_bound_override <= cutoff))
    throw ParameterError("clipped value lower bound must not exceed the cutoff");
}

void RunConfig::validate() const {
  if (samples < 2) throw ParameterError("config needs samples >= 2");
  if (runs < 1) throw ParameterError("config needs runs >= 1");
  if (grid_n < 2) throw ParameterError("config needs grid_n >= 2");
  if (mesh_multiplier < 1) throw ParameterError("config needs mesh_multiplier >= 1");
  if (!(domain_hi > domain_lo)) throw ParameterError("config needs domain_hi > domain_lo");
  nominal.validate();
  for (const auto& g : goals) g.validate();
}

grf::Grid RunConfig::grid() const { return grf::Grid::cell_centers(grid_n, domain_lo, domain_hi); }

fem1d::Mesh RunConfig::mesh() const {
  return fem1d::Mesh::uniform(grid_n * mesh_multiplier, domain_lo, domain_hi);
}

int resolve_threads(int requested) {
  int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (t < 1) t = 1;
  if (const char* cap = std::getenv("UQ_THREADS")) {
    const int limit = std::atoi(cap);
    if (limit >= 1) t = std::min(t, limit);
  }
  return t;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::min(std::max(threads, 1), std::max(count, 1));
  if (threads == 1 || count < 2) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&](int begin, int end) {
    try {
      for (int i = begin; i < end; ++i) fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads) - 1);
  const int chunk = (count + threads - 1) / threads;
  for (int t = 1; t < threads; ++t) {
    const int begin = t * chunk;
    if (begin >= count) break;
    pool.emplace_back(worker, begin, std::min(begin + chunk, count));
  }
  worker(0, std::min(chunk, count));
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::vector<double>> sample_goal_points(const grf::GaussianModel& model,
                                                    const RunConfig& config, int run_index,
                                                    std::uint64_t stream) {
  if (!model.factorized()) throw StateError("sampling requires a factorized model");
  const fem1d::Mesh mesh = config.mesh();
  const int n_goals = static_cast<int>(config.goals.size());
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n_goals));
  for (auto& v : out) v.resize(static_cast<std::size_t>(config.samples));

  const std::uint64_t run_key =
      rng::derive(config.seed, stream, static_cast<std::uint64_t>(run_index));
  parallel_for(config.samples, resolve_threads(config.threads), [&](int k) {
    const std::uint64_t field_seed = rng::derive(run_key, static_cast<std::uint64_t>(k));
    try {
      const grf::FieldSample field = grf::sample_log_field(model, field_seed);
      const std::vector<double> cond = fem1d::project_conductivity(field, mesh);
      const fem1d::FemSolution solution = fem1d::solve(cond, mesh, config.flux_bc, field_seed);
      for (int g = 0; g < n_goals; ++g)
        out[static_cast<std::size_t>(g)][static_cast<std::size_t>(k)] =
            fem1d::evaluate_at(solution, config.goals[static_cast<std::size_t>(g)].eval_point);
    } catch (const Error& e) {
      throw ComputationError("solver failure at run " + std::to_string(run_index) + ", sample " +
                             std::to_string(k) + ": " + e.what());
    }
  });
  return out;
}

infodiv::ObservableSamples sample_observable(const grf::GaussianModel& model,
                                             const GoalFunctional& goal, const RunConfig& config,
                                             int run_index, std::uint64_t stream) {
  goal.validate();
  RunConfig one_goal = config;
  one_goal.goals = {goal};
  std::vector<double> raw = sample_goal_points(model, one_goal, run_index, stream)[0];
  for (double& v : raw) v = goal.apply(v);
  const auto [lower, upper] = goal.value_bounds();
  return infodiv::ObservableSamples::from_values(std::move(raw), lower, upper);
}

double weak_error_fd(const grf::GaussianModel& nominal, const grf::GaussianModel& alternative,
                     const GoalFunctional& goal, const RunConfig& config, double scale,
                     int run_index) {
  if (nominal.dim() != alternative.dim())
    throw DimensionError("weak error needs models on the same grid");
  const std::uint64_t alt_stream =
      config.common_random_numbers ? kNominalStream : kAlternativeStream;
  const infodiv::ObservableSamples nom =
      sample_observable(nominal, goal, config, run_index, kNominalStream);
  const infodiv::ObservableSamples alt =
      sample_observable(alternative, goal, config, run_index, alt_stream);
  return scale * (alt.mean - nom.mean);
}

namespace {

// Per-side divergence bound with the method chosen per available support
// bound; concentration falls back to the sampled estimator on a side whose
// required bound is absent.
infodiv::DivergenceBound side_bound(const infodiv::ObservableSamples& samples, double rho,
                                    infodiv::Side side, bool use_concentration) {
  if (use_concentration) {
    const bool have_needed_bound = side == infodiv::Side::upper
                                       ? samples.upper_bound.has_value()
                                       : samples.lower_bound.has_value();
    if (have_needed_bound)
      return infodiv::concentration_xi(samples, rho, infodiv::ConcentrationVariant::bennett, side);
  }
  return infodiv::xi_bound(samples, rho, side);
}

}  // namespace

SensitivityResult sensitivity_experiment(const RunConfig& config, grf::Param direction,
                                         std::span<const double> epsilons,
                                         bool use_concentration) {
  config.validate();
  for (double eps : epsilons)
    if (!(eps > 0.0)) throw ParameterError("perturbations must be positive");

  const grf::Grid grid = config.grid();
  grf::GaussianModel nominal = grf::build_covariance(grid, config.nominal);
  grf::factorize(nominal);

  SensitivityResult result;
  result.direction = direction;
  result.theta_component = config.nominal.component(direction);

  const int n_goals = static_cast<int>(config.goals.size());
  result.goals.resize(static_cast<std::size_t>(n_goals));
  for (int g = 0; g < n_goals; ++g) {
    auto& goal_result = result.goals[static_cast<std::size_t>(g)];
    const auto& goal = config.goals[static_cast<std::size_t>(g)];
    goal_result.goal_name = goal.name.empty() ? goal_kind_name(goal.kind) : goal.name;
    goal_result.method = use_concentration && goal.value_bounds().second.has_value()
                             ? infodiv::BoundMethod::bennett
                             : infodiv::BoundMethod::sampled;
    goal_result.by_epsilon.resize(epsilons.size());
  }
  if (epsilons.empty()) return result;

  // Nominal solves are reused across epsilons and goals.
  std::vector<std::vector<std::vector<double>>> raw_nominal(
      static_cast<std::size_t>(config.runs));
  for (int r = 0; r < config.runs; ++r)
    raw_nominal[static_cast<std::size_t>(r)] =
        sample_goal_points(nominal, config, r, kNominalStream);

  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const double eps = epsilons[e];
    const grf::HyperParams perturbed = config.nominal.perturbed(direction, eps);
    grf::GaussianModel alternative = grf::build_covariance(grid, perturbed);
    grf::factorize(alternative);
    const double rho =
        std::max(0.0, infodiv::relative_entropy_gaussian(alternative, nominal).value);
    const double scale = result.theta_component / eps;
    const std::uint64_t alt_stream =
        config.common_random_numbers ? kNominalStream : kAlternativeStream;

    for (int g = 0; g < n_goals; ++g) {
      auto& eps_result = result.goals[static_cast<std::size_t>(g)].by_epsilon[e];
      eps_result.epsilon = eps;
      eps_result.rho = rho;
      eps_result.scale = scale;
      eps_result.cells.resize(static_cast<std::size_t>(config.runs));
    }

    for (int r = 0; r < config.runs; ++r) {
      const auto raw_alt = sample_goal_points(alternative, config, r, alt_stream);
      for (int g = 0; g < n_goals; ++g) {
        const auto& goal = config.goals[static_cast<std::size_t>(g)];
        const auto [lower, upper] = goal.value_bounds();
        std::vector<double> nom_values = raw_nominal[static_cast<std::size_t>(r)]
                                                    [static_cast<std::size_t>(g)];
        for (double& v : nom_values) v = goal.apply(v);
        const auto nom_samples =
            infodiv::ObservableSamples::from_values(std::move(nom_values), lower, upper);

        const bool bennett =
            result.goals[static_cast<std::size_t>(g)].method == infodiv::BoundMethod::bennett;
        const auto up = side_bound(nom_samples, rho, infodiv::Side::upper, bennett);
        const auto lo = side_bound(nom_samples, rho, infodiv::Side::lower, bennett);

        double alt_mean_acc = 0.0;
        for (double v : raw_alt[static_cast<std::size_t>(g)]) alt_mean_acc += goal.apply(v);
        const double alt_mean = alt_mean_acc / static_cast<double>(config.samples);

        auto& cell = result.goals[static_cast<std::size_t>(g)]
                         .by_epsilon[e]
                         .cells[static_cast<std::size_t>(r)];
        cell.xi_plus = scale * up.xi_plus;
        cell.xi_minus = scale * lo.xi_minus;
        cell.c_star_plus = up.c_star_plus;
        cell.c_star_minus = lo.c_star_minus;
        cell.boundary_hit = up.boundary_hit || lo.boundary_hit;
        cell.fd = scale * (alt_mean - nom_samples.mean);
        cell.est_var = up.c_star_plus > 0.0 && nom_samples.variance > 0.0
                           ? infodiv::estimator_variance(nom_samples, up.c_star_plus,
                                                         nom_samples.size())
                           : 0.0;
      }
    }

    for (int g = 0; g < n_goals; ++g) {
      auto& eps_result = result.goals[static_cast<std::size_t>(g)].by_epsilon[e];
      std::vector<double> xim, xip, fd;
      for (const auto& cell : eps_result.cells) {
        xim.push_back(cell.xi_minus);
        xip.push_back(cell.xi_plus);
        fd.push_back(cell.fd);
      }
      eps_result.xi_minus = summarize(xim);
      eps_result.xi_plus = summarize(xip);
      eps_result.fd = summarize(fd);
    }
  }
  return result;
}

ScreeningResult screening_report(const grf::Grid& grid, const grf::HyperParams& params) {
  ScreeningResult r;
  r.fim = infodiv::fim_gaussian(grid, params);
  for (int d = 0; d < 4; ++d) {
    bool clamped = false;
    r.j[static_cast<std::size_t>(d)] =
        infodiv::screening_index(params, r.fim, static_cast<grf::Param>(d), &clamped);
    r.clamped[static_cast<std::size_t>(d)] = clamped;
  }
  return r;
}

double epsilon_for_budget(const grf::Grid& grid, const grf::HyperParams& params,
                          grf::Param direction, double rho_target) {
  if (!(rho_target > 0.0)) throw ParameterError("budget target must be positive");
  grf::GaussianModel nominal = grf::build_covariance(grid, params);
  grf::factorize(nominal);
  const auto re_at = [&](double eps) {
    const grf::GaussianModel alt = grf::build_covariance(grid, params.perturbed(direction, eps));
    return std::max(0.0, infodiv::relative_entropy_gaussian(alt, nominal).value);
  };
  const double theta = params.component(direction);
  double hi = (theta != 0.0 ? std::abs(theta) : 1.0) * 1e-6;
  double lo = 0.0;
  int guard = 0;
  while (re_at(hi) < rho_target) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 200) throw ComputationError("could not bracket the requested budget");
  }
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (re_at(mid) < rho_target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace uq::mc
