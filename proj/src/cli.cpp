#include "uq/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "uq/errors.hpp"
#include "uq/infodiv.hpp"
#include "uq/rng.hpp"

namespace uq::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

// Seed-derivation tags for the independent sampling stages.
constexpr std::uint64_t kChainTag = 101;
constexpr std::uint64_t kWorstcaseBaseTag = 103;
constexpr std::uint64_t kWorstcaseTrainTag = 104;

std::string iso_timestamp() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
    t = static_cast<std::time_t>(std::atoll(epoch));
  else
    t = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

using ordered_json = nlohmann::ordered_json;

template <typename T>
T get_field(const ordered_json& obj, const std::string& path, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

grf::HyperParams params_from_json(const ordered_json& obj, const std::string& path,
                                  const grf::HyperParams& fallback) {
  grf::HyperParams p = fallback;
  p.mu = get_field(obj, path, "mu", p.mu);
  p.sigma2 = get_field(obj, path, "sigma2", p.sigma2);
  p.ell = get_field(obj, path, "ell", p.ell);
  p.tau2 = get_field(obj, path, "tau2", p.tau2);
  return p;
}

ordered_json params_to_json(const grf::HyperParams& p) {
  return {{"mu", p.mu}, {"sigma2", p.sigma2}, {"ell", p.ell}, {"tau2", p.tau2}};
}

mc::GoalFunctional goal_from_json(const ordered_json& obj, const std::string& path) {
  mc::GoalFunctional g;
  if (!obj.contains("kind")) throw ConfigError(path + ".kind: required");
  g.kind = mc::goal_kind_from_name(obj.at("kind").get<std::string>());
  g.name = get_field<std::string>(obj, path, "name", "");
  g.eval_point = get_field(obj, path, "eval_point", 1.0);
  g.threshold = get_field(obj, path, "threshold", 0.0);
  g.lo = get_field(obj, path, "lo", 0.0);
  g.hi = get_field(obj, path, "hi", 0.0);
  g.cutoff = get_field(obj, path, "cutoff", 0.0);
  g.scale = get_field(obj, path, "scale", 1.0);
  if (obj.contains("lower_bound")) g.lower_bound_override = obj.at("lower_bound").get<double>();
  return g;
}

ordered_json goal_to_json(const mc::GoalFunctional& g) {
  ordered_json obj;
  obj["name"] = g.name;
  obj["kind"] = mc::goal_kind_name(g.kind);
  obj["eval_point"] = g.eval_point;
  switch (g.kind) {
    case mc::GoalFunctional::Kind::threshold_indicator: obj["threshold"] = g.threshold; break;
    case mc::GoalFunctional::Kind::interval_indicator:
      obj["lo"] = g.lo;
      obj["hi"] = g.hi;
      break;
    case mc::GoalFunctional::Kind::clipped_value: obj["cutoff"] = g.cutoff; break;
    case mc::GoalFunctional::Kind::scaled_value: obj["scale"] = g.scale; break;
  }
  if (g.lower_bound_override) obj["lower_bound"] = *g.lower_bound_override;
  return obj;
}

DataSourceConfig data_source_from_json(const ordered_json& obj, const std::string& path,
                                       const DataSourceConfig& fallback) {
  DataSourceConfig d = fallback;
  if (obj.contains("csv")) {
    d.synthetic = false;
    d.csv_path = obj.at("csv").get<std::string>();
    return d;
  }
  if (obj.contains("synthetic")) {
    const auto& syn = obj.at("synthetic");
    d.synthetic = true;
    d.theta0 = params_from_json(syn.value("theta0", ordered_json::object()),
                                path + ".synthetic.theta0", d.theta0);
    d.count = get_field(syn, path + ".synthetic", "count", d.count);
    d.extent = get_field(syn, path + ".synthetic", "extent", d.extent);
    d.seed = get_field<std::uint64_t>(syn, path + ".synthetic", "seed", d.seed);
  }
  return d;
}

ordered_json data_source_to_json(const DataSourceConfig& d) {
  ordered_json obj;
  if (!d.synthetic) {
    obj["csv"] = d.csv_path;
  } else {
    obj["synthetic"] = {{"theta0", params_to_json(d.theta0)},
                        {"count", d.count},
                        {"extent", d.extent},
                        {"seed", d.seed}};
  }
  return obj;
}

ordered_json config_to_json(const Config& c) {
  ordered_json doc;
  doc["run"] = {{"samples", c.run.samples},       {"runs", c.run.runs},
                {"seed", c.run.seed},             {"grid_n", c.run.grid_n},
                {"mesh_multiplier", c.run.mesh_multiplier},
                {"threads", c.run.threads},
                {"common_random_numbers", c.run.common_random_numbers},
                {"use_concentration", c.use_concentration}};
  doc["domain"] = {{"lo", c.run.domain_lo}, {"hi", c.run.domain_hi}, {"flux", c.run.flux_bc}};
  doc["nominal"] = params_to_json(c.run.nominal);
  ordered_json goals = ordered_json::array();
  for (const auto& g : c.run.goals) goals.push_back(goal_to_json(g));
  doc["goals"] = std::move(goals);

  ordered_json sens;
  ordered_json dirs = ordered_json::array();
  for (auto d : c.directions) dirs.push_back(grf::kParamNames[static_cast<std::size_t>(d)]);
  sens["directions"] = std::move(dirs);
  if (!c.explicit_epsilons.empty()) {
    ordered_json eps;
    for (const auto& [d, list] : c.explicit_epsilons)
      eps[grf::kParamNames[static_cast<std::size_t>(d)]] = list;
    sens["epsilons"] = std::move(eps);
  } else {
    sens["rho_targets"] = c.rho_targets;
  }
  doc["sensitivity"] = std::move(sens);

  doc["screen"] = {{"ell", c.screen_ell}, {"tau2", c.screen_tau2}};
  doc["misspec"] = {{"data", data_source_to_json(c.misspec_data)},
                    {"fractions", c.fractions},
                    {"nominal_fraction", c.misspec_nominal_fraction},
                    {"calibration_samples", c.calibration_samples}};
  doc["worstcase"] = {{"data", data_source_to_json(c.worstcase_data)},
                      {"nominal_fraction", c.wc_nominal_fraction},
                      {"fraction_step", c.wc_fraction_step},
                      {"count", c.wc_count},
                      {"bins", c.wc_bins},
                      {"nominals", c.wc_nominals}};
  return doc;
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(i);
  return (1.0 - frac) * v[i] + frac * v[i + 1];
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

ordered_json make_metadata(const Config& config, const std::string& command) {
  ordered_json meta;
  meta["command"] = command;
  meta["version"] = kVersion;
  meta["seed"] = config.run.seed;
  meta["timestamp"] = iso_timestamp();
  meta["config"] = config.echo;
  return meta;
}

// The three data-experiment goals: threshold and interval around the
// calibrated mean m and spread s of u(x1), and the value scaled by m.
// Calibration draws its own seed stream.
std::vector<mc::GoalFunctional> calibrated_goals(const grf::GaussianModel& nominal,
                                                 const mc::RunConfig& run, double x1) {
  mc::RunConfig calib = run;
  mc::GoalFunctional probe;
  probe.kind = mc::GoalFunctional::Kind::scaled_value;
  probe.name = "calibration";
  probe.eval_point = x1;
  probe.scale = 1.0;
  const infodiv::ObservableSamples raw =
      mc::sample_observable(nominal, probe, calib, 0, mc::kCalibrationStream);
  const double m = raw.mean;
  const double s = std::sqrt(raw.variance);

  mc::GoalFunctional g1;
  g1.kind = mc::GoalFunctional::Kind::threshold_indicator;
  g1.name = "g1";
  g1.eval_point = x1;
  g1.threshold = m;

  mc::GoalFunctional g2;
  g2.kind = mc::GoalFunctional::Kind::interval_indicator;
  g2.name = "g2";
  g2.eval_point = x1;
  g2.lo = m - s;
  g2.hi = m + s;

  mc::GoalFunctional g3;
  g3.kind = mc::GoalFunctional::Kind::scaled_value;
  g3.name = "g3";
  g3.eval_point = x1;
  g3.scale = m;
  g3.lower_bound_override = 0.0;  // u is nonnegative for this BVP
  return {g1, g2, g3};
}

}  // namespace

geostat::DataSet DataSourceConfig::load() const {
  if (!synthetic) return geostat::ingest_csv_file(csv_path);
  return geostat::synthetic_truth(theta0, count, extent, seed);
}

Config Config::defaults() {
  Config c;
  c.run.samples = 1000;
  c.run.runs = 20;
  c.run.seed = 42;
  c.run.grid_n = 64;
  c.run.mesh_multiplier = 2;
  c.run.nominal = {0.8, 4.0, 0.005, 0.045};

  mc::GoalFunctional g1;
  g1.kind = mc::GoalFunctional::Kind::threshold_indicator;
  g1.name = "g1";
  g1.eval_point = 1.0;
  g1.threshold = 1.2;
  mc::GoalFunctional g2;
  g2.kind = mc::GoalFunctional::Kind::interval_indicator;
  g2.name = "g2";
  g2.eval_point = 1.0;
  g2.lo = 0.25;
  g2.hi = 0.75;
  mc::GoalFunctional g3;
  g3.kind = mc::GoalFunctional::Kind::clipped_value;
  g3.name = "g3";
  g3.eval_point = 1.0;
  g3.cutoff = 3.0;
  g3.lower_bound_override = 0.0;
  c.run.goals = {g1, g2, g3};
  c.echo = config_to_json(c);
  return c;
}

Config Config::from_json(const ordered_json& doc) {
  Config c = defaults();
  if (doc.contains("run")) {
    const auto& run = doc.at("run");
    c.run.samples = get_field(run, "run", "samples", c.run.samples);
    c.run.runs = get_field(run, "run", "runs", c.run.runs);
    c.run.seed = get_field<std::uint64_t>(run, "run", "seed", c.run.seed);
    c.run.grid_n = get_field(run, "run", "grid_n", c.run.grid_n);
    c.run.mesh_multiplier = get_field(run, "run", "mesh_multiplier", c.run.mesh_multiplier);
    c.run.threads = get_field(run, "run", "threads", c.run.threads);
    c.run.common_random_numbers =
        get_field(run, "run", "common_random_numbers", c.run.common_random_numbers);
    c.use_concentration = get_field(run, "run", "use_concentration", c.use_concentration);
  }
  if (doc.contains("domain")) {
    const auto& dom = doc.at("domain");
    c.run.domain_lo = get_field(dom, "domain", "lo", c.run.domain_lo);
    c.run.domain_hi = get_field(dom, "domain", "hi", c.run.domain_hi);
    c.run.flux_bc = get_field(dom, "domain", "flux", c.run.flux_bc);
  }
  if (doc.contains("nominal"))
    c.run.nominal = params_from_json(doc.at("nominal"), "nominal", c.run.nominal);
  if (doc.contains("goals")) {
    c.run.goals.clear();
    int i = 0;
    for (const auto& g : doc.at("goals"))
      c.run.goals.push_back(goal_from_json(g, "goals[" + std::to_string(i++) + "]"));
  }
  if (doc.contains("sensitivity")) {
    const auto& sens = doc.at("sensitivity");
    if (sens.contains("directions")) {
      c.directions.clear();
      for (const auto& d : sens.at("directions"))
        c.directions.push_back(grf::param_from_name(d.get<std::string>()));
    }
    if (sens.contains("epsilons")) {
      c.explicit_epsilons.clear();
      for (const auto& [name, list] : sens.at("epsilons").items())
        c.explicit_epsilons[static_cast<int>(grf::param_from_name(name))] =
            list.get<std::vector<double>>();
    } else if (sens.contains("rho_targets")) {
      c.rho_targets = sens.at("rho_targets").get<std::vector<double>>();
    }
  }
  if (doc.contains("screen")) {
    const auto& screen = doc.at("screen");
    c.screen_ell = get_field(screen, "screen", "ell", c.screen_ell);
    c.screen_tau2 = get_field(screen, "screen", "tau2", c.screen_tau2);
  }
  if (doc.contains("misspec")) {
    const auto& mis = doc.at("misspec");
    if (mis.contains("data"))
      c.misspec_data = data_source_from_json(mis.at("data"), "misspec.data", c.misspec_data);
    if (mis.contains("fractions")) c.fractions = mis.at("fractions").get<std::vector<double>>();
    c.misspec_nominal_fraction =
        get_field(mis, "misspec", "nominal_fraction", c.misspec_nominal_fraction);
    c.calibration_samples = get_field(mis, "misspec", "calibration_samples", c.calibration_samples);
  }
  if (doc.contains("worstcase")) {
    const auto& wc = doc.at("worstcase");
    if (wc.contains("data"))
      c.worstcase_data = data_source_from_json(wc.at("data"), "worstcase.data", c.worstcase_data);
    c.wc_nominal_fraction = get_field(wc, "worstcase", "nominal_fraction", c.wc_nominal_fraction);
    c.wc_fraction_step = get_field(wc, "worstcase", "fraction_step", c.wc_fraction_step);
    c.wc_count = get_field(wc, "worstcase", "count", c.wc_count);
    c.wc_bins = get_field(wc, "worstcase", "bins", c.wc_bins);
    c.wc_nominals = get_field(wc, "worstcase", "nominals", c.wc_nominals);
  }
  try {
    c.run.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (c.wc_bins < 1 || c.wc_count < 1 || c.wc_nominals < 1)
    throw ConfigError("worstcase: bins, count, and nominals must be positive");
  for (double f : c.fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("misspec.fractions: values must lie in (0, 1]");
  if (!std::is_sorted(c.fractions.begin(), c.fractions.end()))
    throw ConfigError("misspec.fractions: values must be ascending");
  c.echo = config_to_json(c);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("could not open config file '" + path + "'");
  ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config JSON in '" + path + "': " + e.what());
  }
  return Config::from_json(doc);
}

report::ExperimentReport cmd_screen(const Config& config) {
  report::ExperimentReport rep;
  rep.experiment = "screen";
  rep.metadata = make_metadata(config, "screen");
  rep.columns = {"model", "ell", "tau2", "direction", "theta", "fim_diag", "j", "clamped"};

  const std::vector<double> ells =
      config.screen_ell.empty() ? std::vector<double>{config.run.nominal.ell} : config.screen_ell;
  const std::vector<double> taus = config.screen_tau2.empty()
                                       ? std::vector<double>{config.run.nominal.tau2}
                                       : config.screen_tau2;
  const grf::Grid grid = config.run.grid();
  int model_index = 0;
  for (double ell : ells) {
    for (double tau2 : taus) {
      grf::HyperParams params = config.run.nominal;
      params.ell = ell;
      params.tau2 = tau2;
      const mc::ScreeningResult screening = mc::screening_report(grid, params);
      for (int d = 0; d < 4; ++d) {
        const auto sd = static_cast<std::size_t>(d);
        rep.add_row({report::Cell::number(model_index), report::Cell::number(ell),
                     report::Cell::number(tau2), report::Cell::of(grf::kParamNames[sd]),
                     report::Cell::number(params.component(static_cast<grf::Param>(d))),
                     report::Cell::number(screening.fim(d, d)),
                     report::Cell::number(screening.j[sd]),
                     report::Cell::of(screening.clamped[sd] ? "yes" : "no")});
      }
      ++model_index;
    }
  }
  return rep;
}

report::ExperimentReport cmd_sensitivity(const Config& config) {
  report::ExperimentReport rep;
  rep.experiment = config.use_concentration ? "concentration" : "sensitivity";
  rep.metadata = make_metadata(config, "sensitivity");
  rep.columns = {"direction",    "goal",        "method",     "epsilon",      "rho",
                 "scale",        "xi_minus",    "xi_minus_sd", "xi_plus",     "xi_plus_sd",
                 "fd",           "fd_sd",       "c_star_minus", "c_star_plus", "est_var",
                 "boundary_hits"};

  const grf::Grid grid = config.run.grid();
  for (grf::Param direction : config.directions) {
    std::vector<double> epsilons;
    const auto explicit_it = config.explicit_epsilons.find(static_cast<int>(direction));
    if (explicit_it != config.explicit_epsilons.end()) {
      epsilons = explicit_it->second;
    } else {
      for (double rho : config.rho_targets)
        epsilons.push_back(mc::epsilon_for_budget(grid, config.run.nominal, direction, rho));
    }
    const mc::SensitivityResult result =
        mc::sensitivity_experiment(config.run, direction, epsilons, config.use_concentration);
    for (const auto& goal : result.goals) {
      for (const auto& eps : goal.by_epsilon) {
        std::vector<double> c_minus, c_plus, est_var;
        int boundary_hits = 0;
        for (const auto& cell : eps.cells) {
          c_minus.push_back(cell.c_star_minus);
          c_plus.push_back(cell.c_star_plus);
          est_var.push_back(cell.est_var);
          boundary_hits += cell.boundary_hit ? 1 : 0;
        }
        rep.add_row({report::Cell::of(grf::kParamNames[static_cast<std::size_t>(direction)]),
                     report::Cell::of(goal.goal_name),
                     report::Cell::of(infodiv::bound_method_name(goal.method)),
                     report::Cell::number(eps.epsilon), report::Cell::number(eps.rho),
                     report::Cell::number(eps.scale), report::Cell::number(eps.xi_minus.mean),
                     report::Cell::number(eps.xi_minus.sd), report::Cell::number(eps.xi_plus.mean),
                     report::Cell::number(eps.xi_plus.sd), report::Cell::number(eps.fd.mean),
                     report::Cell::number(eps.fd.sd), report::Cell::number(mean_sd(c_minus).mean),
                     report::Cell::number(mean_sd(c_plus).mean),
                     report::Cell::number(mean_sd(est_var).mean),
                     report::Cell::number(boundary_hits)});
      }
    }
  }
  return rep;
}

namespace {

// Common scaffolding for the data experiments: load the data, scale the
// domain to its extent, fit the nominal model, calibrate the goals.
struct DataExperiment {
  geostat::DataSet full;
  mc::RunConfig run;  // domain scaled, goals calibrated
  grf::Grid grid;
};

DataExperiment prepare_data_experiment(const Config& config, const geostat::DataSet& full,
                                       const geostat::FitResult& nominal_fit,
                                       grf::GaussianModel& nominal_model) {
  DataExperiment exp;
  exp.full = full;
  exp.run = config.run;
  exp.run.domain_lo = 0.0;
  exp.run.domain_hi = full.extent();
  exp.grid = exp.run.grid();
  nominal_model = grf::build_covariance(exp.grid, nominal_fit.params);
  grf::factorize(nominal_model);
  exp.run.goals = calibrated_goals(nominal_model, exp.run, exp.run.domain_hi);
  return exp;
}

}  // namespace

report::ExperimentReport cmd_misspec(const Config& config) {
  report::ExperimentReport rep;
  rep.experiment = "misspec";
  rep.metadata = make_metadata(config, "misspec");
  rep.columns = {"fraction",    "goal",       "method",      "re",          "xi_minus",
                 "xi_minus_q1", "xi_minus_med", "xi_minus_q3", "xi_plus",   "xi_plus_q1",
                 "xi_plus_med", "xi_plus_q3", "fd",          "fd_sd",       "fd_q1",
                 "fd_med",      "fd_q3",      "c_star_plus", "est_var"};

  const geostat::DataSet full = config.misspec_data.load();
  if (config.fractions.empty()) return rep;

  // Additive chain: subsample the smallest fraction, then enlarge step by
  // step; the nominal model sits at the configured fraction of the chain.
  std::vector<geostat::DataSet> chain;
  chain.push_back(geostat::subsample(full, config.fractions.front(),
                                     rng::derive(config.run.seed, kChainTag, 0)));
  for (std::size_t k = 1; k < config.fractions.size(); ++k) {
    const double step = config.fractions[k] - config.fractions[k - 1];
    chain.push_back(geostat::enlarge(chain.back(), full, step,
                                     rng::derive(config.run.seed, kChainTag, k)));
  }
  std::size_t nominal_idx = 0;
  for (std::size_t k = 1; k < config.fractions.size(); ++k)
    if (std::abs(config.fractions[k] - config.misspec_nominal_fraction) <
        std::abs(config.fractions[nominal_idx] - config.misspec_nominal_fraction))
      nominal_idx = k;

  const geostat::FitResult nominal_fit =
      geostat::fit_mle(chain[nominal_idx], geostat::default_init(chain[nominal_idx]));
  grf::GaussianModel nominal_model;
  DataExperiment exp = prepare_data_experiment(config, full, nominal_fit, nominal_model);
  if (config.calibration_samples > 1) {
    mc::RunConfig calib_run = exp.run;
    calib_run.samples = config.calibration_samples;
    exp.run.goals = calibrated_goals(nominal_model, calib_run, exp.run.domain_hi);
  }

  // Nominal solves, reused across fractions.
  std::vector<std::vector<std::vector<double>>> raw_nominal(
      static_cast<std::size_t>(exp.run.runs));
  for (int r = 0; r < exp.run.runs; ++r)
    raw_nominal[static_cast<std::size_t>(r)] =
        mc::sample_goal_points(nominal_model, exp.run, r, mc::kNominalStream);

  for (std::size_t q = 0; q < chain.size(); ++q) {
    const geostat::FitResult fit = geostat::fit_mle(chain[q], geostat::default_init(chain[q]));
    grf::GaussianModel alt_model = grf::build_covariance(exp.grid, fit.params);
    grf::factorize(alt_model);
    const double re =
        std::max(0.0, infodiv::relative_entropy_gaussian(alt_model, nominal_model).value);

    const std::size_t n_goals = exp.run.goals.size();
    std::vector<std::vector<double>> xim(n_goals), xip(n_goals), fd(n_goals), cstar(n_goals),
        est(n_goals);
    for (int r = 0; r < exp.run.runs; ++r) {
      const auto raw_alt = mc::sample_goal_points(alt_model, exp.run, r, mc::kAlternativeStream);
      for (std::size_t g = 0; g < n_goals; ++g) {
        const auto& goal = exp.run.goals[g];
        const auto [lower, upper] = goal.value_bounds();
        std::vector<double> nom_values = raw_nominal[static_cast<std::size_t>(r)][g];
        for (double& v : nom_values) v = goal.apply(v);
        const auto nom_samples =
            infodiv::ObservableSamples::from_values(std::move(nom_values), lower, upper);

        const bool bennett = config.use_concentration && upper.has_value();
        infodiv::DivergenceBound up, lo;
        if (bennett) {
          up = infodiv::concentration_xi(nom_samples, re, infodiv::ConcentrationVariant::bennett,
                                         infodiv::Side::upper);
          lo = lower.has_value()
                   ? infodiv::concentration_xi(nom_samples, re,
                                               infodiv::ConcentrationVariant::bennett,
                                               infodiv::Side::lower)
                   : infodiv::xi_bound(nom_samples, re, infodiv::Side::lower);
        } else {
          up = infodiv::xi_bound(nom_samples, re, infodiv::Side::upper);
          lo = infodiv::xi_bound(nom_samples, re, infodiv::Side::lower);
        }
        double alt_mean = 0.0;
        for (double v : raw_alt[g]) alt_mean += goal.apply(v);
        alt_mean /= static_cast<double>(exp.run.samples);

        xim[g].push_back(lo.xi_minus);
        xip[g].push_back(up.xi_plus);
        fd[g].push_back(alt_mean - nom_samples.mean);
        cstar[g].push_back(up.c_star_plus);
        est[g].push_back(nom_samples.variance > 0.0
                             ? infodiv::estimator_variance(nom_samples, up.c_star_plus,
                                                           nom_samples.size())
                             : 0.0);
      }
    }
    for (std::size_t g = 0; g < n_goals; ++g) {
      const auto& goal = exp.run.goals[g];
      const bool bennett = config.use_concentration && goal.value_bounds().second.has_value();
      rep.add_row(
          {report::Cell::number(config.fractions[q]), report::Cell::of(goal.name),
           report::Cell::of(bennett ? "bennett" : "sampled"), report::Cell::number(re),
           report::Cell::number(mean_sd(xim[g]).mean), report::Cell::number(quantile(xim[g], 0.25)),
           report::Cell::number(quantile(xim[g], 0.5)), report::Cell::number(quantile(xim[g], 0.75)),
           report::Cell::number(mean_sd(xip[g]).mean), report::Cell::number(quantile(xip[g], 0.25)),
           report::Cell::number(quantile(xip[g], 0.5)), report::Cell::number(quantile(xip[g], 0.75)),
           report::Cell::number(mean_sd(fd[g]).mean), report::Cell::number(mean_sd(fd[g]).sd),
           report::Cell::number(quantile(fd[g], 0.25)), report::Cell::number(quantile(fd[g], 0.5)),
           report::Cell::number(quantile(fd[g], 0.75)), report::Cell::number(mean_sd(cstar[g]).mean),
           report::Cell::number(mean_sd(est[g]).mean)});
    }
  }
  return rep;
}

report::ExperimentReport cmd_worstcase(const Config& config) {
  report::ExperimentReport rep;
  rep.experiment = "worstcase";
  rep.metadata = make_metadata(config, "worstcase");
  rep.columns = {"row_type", "nominal", "selection", "bin_lo",   "bin_hi",  "bin_count",
                 "re",       "goal",    "method",    "xi_minus", "xi_minus_sd",
                 "xi_plus",  "xi_plus_sd", "fd",     "fd_sd"};

  const geostat::DataSet full = config.worstcase_data.load();
  const report::Cell blank = report::Cell::of("");

  for (int i = 0; i < config.wc_nominals; ++i) {
    const std::uint64_t base_seed =
        rng::derive(config.run.seed, kWorstcaseBaseTag, static_cast<std::uint64_t>(i));
    const geostat::DataSet base = geostat::subsample(full, config.wc_nominal_fraction, base_seed);
    const geostat::FitResult nominal_fit = geostat::fit_mle(base, geostat::default_init(base));

    grf::GaussianModel nominal_model;
    DataExperiment exp = prepare_data_experiment(config, full, nominal_fit, nominal_model);

    const geostat::ReDistribution dist = geostat::re_distribution(
        nominal_fit, full, base, config.wc_count, exp.grid,
        rng::derive(config.run.seed, kWorstcaseTrainTag, static_cast<std::uint64_t>(i)),
        config.wc_fraction_step);

    // Histogram of the training-set relative entropies.
    double re_max = 0.0;
    for (const auto& e : dist.entries) re_max = std::max(re_max, e.re);
    const double bin_width = re_max > 0.0 ? re_max / config.wc_bins : 1.0;
    std::vector<int> counts(static_cast<std::size_t>(config.wc_bins), 0);
    for (const auto& e : dist.entries) {
      auto b = static_cast<std::size_t>(e.re / bin_width);
      if (b >= counts.size()) b = counts.size() - 1;
      ++counts[b];
    }
    for (int b = 0; b < config.wc_bins; ++b) {
      rep.add_row({report::Cell::of("histogram"), report::Cell::number(i), blank,
                   report::Cell::number(b * bin_width), report::Cell::number((b + 1) * bin_width),
                   report::Cell::number(counts[static_cast<std::size_t>(b)]), blank, blank, blank,
                   blank, blank, blank, blank, blank, blank});
    }

    // Bounds at the worst-case budget, weak error per selection.
    const double rho_budget = dist.entries[static_cast<std::size_t>(dist.idx_max)].re;
    const std::size_t n_goals = exp.run.goals.size();

    std::vector<std::vector<double>> xim(n_goals), xip(n_goals);
    std::vector<std::vector<std::vector<double>>> raw_nominal(
        static_cast<std::size_t>(exp.run.runs));
    for (int r = 0; r < exp.run.runs; ++r)
      raw_nominal[static_cast<std::size_t>(r)] =
          mc::sample_goal_points(nominal_model, exp.run, r, mc::kNominalStream);
    for (int r = 0; r < exp.run.runs; ++r) {
      for (std::size_t g = 0; g < n_goals; ++g) {
        const auto& goal = exp.run.goals[g];
        const auto [lower, upper] = goal.value_bounds();
        std::vector<double> nom_values = raw_nominal[static_cast<std::size_t>(r)][g];
        for (double& v : nom_values) v = goal.apply(v);
        const auto nom_samples =
            infodiv::ObservableSamples::from_values(std::move(nom_values), lower, upper);
        xim[g].push_back(infodiv::xi_bound(nom_samples, rho_budget, infodiv::Side::lower).xi_minus);
        xip[g].push_back(infodiv::xi_bound(nom_samples, rho_budget, infodiv::Side::upper).xi_plus);
      }
    }

    const std::array<std::pair<const char*, int>, 4> selections{
        std::pair<const char*, int>{"max", dist.idx_max}, {"min", dist.idx_min},
        {"mean", dist.idx_mean}, {"median", dist.idx_median}};
    for (const auto& [label, idx] : selections) {
      const auto& entry = dist.entries[static_cast<std::size_t>(idx)];
      grf::GaussianModel alt_model = grf::build_covariance(exp.grid, entry.fit.params);
      grf::factorize(alt_model);
      std::vector<std::vector<std::vector<double>>> raw_alt(
          static_cast<std::size_t>(exp.run.runs));
      for (int r = 0; r < exp.run.runs; ++r)
        raw_alt[static_cast<std::size_t>(r)] =
            mc::sample_goal_points(alt_model, exp.run, r, mc::kAlternativeStream);
      for (std::size_t g = 0; g < n_goals; ++g) {
        const auto& goal = exp.run.goals[g];
        std::vector<double> fds;
        for (int r = 0; r < exp.run.runs; ++r) {
          double alt_mean = 0.0, nom_mean = 0.0;
          for (double v : raw_alt[static_cast<std::size_t>(r)][g]) alt_mean += goal.apply(v);
          for (double v : raw_nominal[static_cast<std::size_t>(r)][g]) nom_mean += goal.apply(v);
          fds.push_back((alt_mean - nom_mean) / static_cast<double>(exp.run.samples));
        }
        rep.add_row({report::Cell::of("selection"), report::Cell::number(i),
                     report::Cell::of(label), blank, blank, blank, report::Cell::number(entry.re),
                     report::Cell::of(goal.name), report::Cell::of("sampled"),
                     report::Cell::number(mean_sd(xim[g]).mean),
                     report::Cell::number(mean_sd(xim[g]).sd),
                     report::Cell::number(mean_sd(xip[g]).mean),
                     report::Cell::number(mean_sd(xip[g]).sd),
                     report::Cell::number(mean_sd(fds).mean),
                     report::Cell::number(mean_sd(fds).sd)});
      }
    }
  }
  return rep;
}

int run_main(int argc, const char* const* argv) {
  CLI::App app{"Goal-oriented divergence bounds for a random elliptic BVP"};
  app.require_subcommand(1);

  std::string config_path;
  std::string format = "csv";
  std::string out_path;
  std::int64_t seed_override = -1;
  int runs_override = 0;
  int samples_override = 0;
  bool use_concentration = false;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON configuration file");
    cmd->add_option("--seed", seed_override, "override run.seed");
    cmd->add_option("--format", format, "output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--out", out_path, "output path (default: stdout)");
    cmd->add_option("--runs", runs_override, "override run.runs");
    cmd->add_option("--samples", samples_override, "override run.samples");
    cmd->add_flag("--use-concentration", use_concentration,
                  "use Bennett bounds where the goal is bounded");
  };
  CLI::App* screen = app.add_subcommand("screen", "sampling-free screening indices");
  CLI::App* sensitivity = app.add_subcommand("sensitivity", "parametric sensitivity bounds");
  CLI::App* misspec = app.add_subcommand("misspec", "misspecification bounds over a data chain");
  CLI::App* worstcase = app.add_subcommand("worstcase", "worst-case bounds from a training set");
  for (CLI::App* cmd : {screen, sensitivity, misspec, worstcase}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Config config = config_path.empty() ? Config::defaults() : load_config(config_path);
    if (seed_override >= 0) config.run.seed = static_cast<std::uint64_t>(seed_override);
    if (runs_override > 0) config.run.runs = runs_override;
    if (samples_override > 0) config.run.samples = samples_override;
    if (use_concentration) config.use_concentration = true;
    config.run.validate();
    config.echo = config_to_json(config);

    report::ExperimentReport rep;
    if (*screen)
      rep = cmd_screen(config);
    else if (*sensitivity)
      rep = cmd_sensitivity(config);
    else if (*misspec)
      rep = cmd_misspec(config);
    else
      rep = cmd_worstcase(config);

    const report::Format fmt = report::format_from_name(format);
    if (out_path.empty())
      report::emit(rep, fmt, std::cout);
    else
      report::emit_file(rep, fmt, out_path);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace uq::cli
