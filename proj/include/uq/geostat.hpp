#ifndef UQ_GEOSTAT_HPP
#define UQ_GEOSTAT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "uq/grf.hpp"

namespace uq::geostat {

// Observed 1D log-permeability data at strictly increasing locations.
struct DataSet {
  std::vector<double> locations;
  std::vector<double> log_values;
  std::string label;

  std::size_t size() const { return locations.size(); }
  double extent() const;
  void validate() const;  // equal lengths >= 4, increasing, finite
};

// Hyperparameters fitted by maximum likelihood, with the objective value
// at the optimum.
struct FitResult {
  grf::HyperParams params;
  double neg_log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
};

// CSV with header `x,perm` or `x,logperm`; `#` comments; raw permeability
// is log-transformed on ingestion.
DataSet ingest_csv(std::istream& in, const std::string& label = "");
DataSet ingest_csv_file(const std::string& path);

// Gaussian negative log-likelihood of the log-data:
// (logdet Sigma + r' Sigma^-1 r + N log 2 pi) / 2 at observed locations.
double neg_log_likelihood(const DataSet& data, const grf::HyperParams& params);

// Start for the MLE search: sample mean, variance split evenly between
// sill and nugget, correlation length a tenth of the extent.
grf::HyperParams default_init(const DataSet& data);

// Nelder-Mead over (mu, log sigma2, log ell, log tau2) with positivity
// floors sigma2, tau2 >= 1e-10 and ell >= 1e-6 * extent.
FitResult fit_mle(const DataSet& data, const grf::HyperParams& init);

// Uniform draw without replacement of round(fraction * N) points, order
// preserved; deterministic in the seed.
DataSet subsample(const DataSet& data, double fraction, std::uint64_t seed);

// Adds round(fraction_step * N_full) points drawn uniformly from
// full \ base; result stays sorted. `base` must be a subset of `full`.
DataSet enlarge(const DataSet& base, const DataSet& full, double fraction_step,
                std::uint64_t seed);

struct ReDistributionEntry {
  double re = 0.0;
  FitResult fit;
};

struct ReDistribution {
  std::vector<ReDistributionEntry> entries;  // successful fits only
  int attempted = 0;
  int failures = 0;
  // Selections into `entries`: extremes exact, mean/median nearest.
  int idx_max = -1;
  int idx_min = -1;
  int idx_mean = -1;
  int idx_median = -1;
};

// For k < count: enlarge the base data, refit, and compute the relative
// entropy of the refitted model against the nominal fit on `grid`.
// Individual fit failures are skipped and counted; more than half failing
// aborts the experiment.
ReDistribution re_distribution(const FitResult& nominal_fit, const DataSet& full,
                               const DataSet& base, int count, const grf::Grid& grid,
                               std::uint64_t seed, double fraction_step = 0.1);

// Self-contained stand-in for field data: one draw of the log-field with
// known hyperparameters at `count` uniform locations on [0, extent].
DataSet synthetic_truth(const grf::HyperParams& theta0, int count, double extent,
                        std::uint64_t seed, const std::string& label = "synthetic");

}  // namespace uq::geostat

#endif  // UQ_GEOSTAT_HPP
