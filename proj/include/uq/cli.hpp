#ifndef UQ_CLI_HPP
#define UQ_CLI_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "uq/geostat.hpp"
#include "uq/mcengine.hpp"
#include "uq/report.hpp"

namespace uq::cli {

// Where a data experiment gets its observations: a CSV file, or a field
// sampled from known hyperparameters (self-contained runs).
struct DataSourceConfig {
  bool synthetic = true;
  std::string csv_path;
  grf::HyperParams theta0{1.0, 0.5, 0.02, 0.5};
  int count = 200;
  double extent = 1.0;
  std::uint64_t seed = 7;

  geostat::DataSet load() const;
};

// Resolved configuration for all experiment families. `echo` holds the
// fully resolved JSON document, which together with the seed reproduces
// any report byte-identically.
struct Config {
  mc::RunConfig run;
  bool use_concentration = false;

  // sensitivity
  std::vector<grf::Param> directions{grf::Param::ell, grf::Param::tau2};
  std::vector<double> rho_targets{1e-3, 1e-2, 1e-1};
  std::map<int, std::vector<double>> explicit_epsilons;  // keyed by Param index

  // screen: grid of nominal models (outer product of the two lists; empty
  // lists mean the single nominal model)
  std::vector<double> screen_ell;
  std::vector<double> screen_tau2;

  // misspec
  DataSourceConfig misspec_data;
  std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double misspec_nominal_fraction = 0.5;
  int calibration_samples = 0;  // 0 = run.samples

  // worstcase
  DataSourceConfig worstcase_data;
  double wc_nominal_fraction = 0.7;
  double wc_fraction_step = 0.1;
  int wc_count = 100;
  int wc_bins = 20;
  int wc_nominals = 3;

  nlohmann::ordered_json echo;

  static Config from_json(const nlohmann::ordered_json& doc);
  static Config defaults();
};

Config load_config(const std::string& path);

report::ExperimentReport cmd_screen(const Config& config);
report::ExperimentReport cmd_sensitivity(const Config& config);
report::ExperimentReport cmd_misspec(const Config& config);
report::ExperimentReport cmd_worstcase(const Config& config);

// Full command-line entry point. Exit codes: 0 success, 2 config error,
// 3 computation error, 4 I/O error.
int run_main(int argc, const char* const* argv);

}  // namespace uq::cli

#endif  // UQ_CLI_HPP
