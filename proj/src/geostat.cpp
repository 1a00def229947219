#include "uq/geostat.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "uq/errors.hpp"
#include "uq/infodiv.hpp"
#include "uq/nelder_mead.hpp"
#include "uq/rng.hpp"

namespace uq::geostat {

namespace {

constexpr double kVarianceFloor = 1e-10;
constexpr double kEllFloorFraction = 1e-6;

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double parse_double(const std::string& field, long line) {
  const std::string t = trim(field);
  double value = 0.0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError("could not parse numeric field '" + t + "'", line);
  return value;
}

// Draw `count` distinct indices from [0, pool.size()) by partial
// Fisher-Yates, returned sorted.
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool,
                                                  std::size_t count, std::uint64_t seed) {
  rng::Stream stream(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(stream.next_u64() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

double DataSet::extent() const {
  if (locations.size() < 2) return 0.0;
  return locations.back() - locations.front();
}

void DataSet::validate() const {
  if (locations.size() != log_values.size())
    throw DimensionError("data set locations/values length mismatch");
  if (locations.size() < 4) throw ParameterError("data set needs at least 4 points");
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (!std::isfinite(locations[i]) || !std::isfinite(log_values[i]))
      throw ParameterError("data set contains non-finite entries");
    if (i > 0 && !(locations[i] > locations[i - 1]))
      throw ParameterError("data set locations must be strictly increasing");
  }
}

DataSet ingest_csv(std::istream& in, const std::string& label) {
  DataSet data;
  data.label = label;
  bool have_header = false;
  bool take_log = false;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t comma = t.find(',');
    if (comma == std::string::npos) throw ParseError("expected two comma-separated fields", line_number);
    const std::string first = trim(t.substr(0, comma));
    const std::string second = trim(t.substr(comma + 1));
    if (second.find(',') != std::string::npos)
      throw ParseError("expected exactly two fields", line_number);
    if (!have_header) {
      const std::string h1 = lower(first), h2 = lower(second);
      if (h1 != "x" || (h2 != "perm" && h2 != "logperm"))
        throw ParseError("header must be 'x,perm' or 'x,logperm', got '" + t + "'", line_number);
      take_log = h2 == "perm";
      have_header = true;
      continue;
    }
    const double x = parse_double(first, line_number);
    double v = parse_double(second, line_number);
    if (take_log) {
      if (!(v > 0.0)) throw ParseError("permeability must be positive to take its log", line_number);
      v = std::log(v);
    }
    if (!data.locations.empty() && !(x > data.locations.back())) {
      if (x == data.locations.back())
        throw ParseError("duplicate location " + std::to_string(x), line_number);
      throw ParseError("locations must be strictly increasing", line_number);
    }
    data.locations.push_back(x);
    data.log_values.push_back(v);
  }
  if (!have_header) throw ParseError("missing header line");
  data.validate();
  return data;
}

DataSet ingest_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("could not open data file '" + path + "'");
  return ingest_csv(in, path);
}

double neg_log_likelihood(const DataSet& data, const grf::HyperParams& params) {
  data.validate();
  params.validate();
  const auto n = static_cast<Eigen::Index>(data.size());
  grf::GaussianModel model;
  model.cov = grf::covariance_at(data.locations, params);
  model.mean = Eigen::VectorXd::Constant(n, params.mu);
  grf::factorize(model);
  const double logdet = 2.0 * model.chol.diagonal().array().log().sum();
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i)
    r(i) = data.log_values[static_cast<std::size_t>(i)] - params.mu;
  Eigen::VectorXd y = model.chol.triangularView<Eigen::Lower>().solve(r);
  return 0.5 * (logdet + y.squaredNorm() +
                static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
}

grf::HyperParams default_init(const DataSet& data) {
  data.validate();
  const double n = static_cast<double>(data.size());
  const double mean = std::accumulate(data.log_values.begin(), data.log_values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : data.log_values) var += (v - mean) * (v - mean);
  var /= n;
  grf::HyperParams init;
  init.mu = mean;
  init.sigma2 = std::max(0.5 * var, kVarianceFloor);
  init.tau2 = std::max(0.5 * var, kVarianceFloor);
  init.ell = std::max(0.1 * data.extent(), kEllFloorFraction * data.extent());
  return init;
}

FitResult fit_mle(const DataSet& data, const grf::HyperParams& init) {
  data.validate();
  init.validate();
  const double ell_floor = kEllFloorFraction * data.extent();
  const auto to_params = [&](const Eigen::VectorXd& x) {
    grf::HyperParams p;
    p.mu = x(0);
    p.sigma2 = std::max(std::exp(x(1)), kVarianceFloor);
    p.ell = std::max(std::exp(x(2)), ell_floor);
    p.tau2 = std::max(std::exp(x(3)), kVarianceFloor);
    return p;
  };
  Eigen::VectorXd start(4);
  start << init.mu, std::log(std::max(init.sigma2, kVarianceFloor)),
      std::log(std::max(init.ell, ell_floor)), std::log(std::max(init.tau2, kVarianceFloor));

  opt::NelderMeadResult nm;
  try {
    nm = opt::nelder_mead([&](const Eigen::VectorXd& x) { return neg_log_likelihood(data, to_params(x)); },
                          start, 1e-6, 500);
  } catch (const ComputationError& e) {
    throw Error(std::string("maximum likelihood fit failed: ") + e.what());
  }
  FitResult fit;
  fit.params = to_params(nm.x);
  fit.converged = nm.converged;
  fit.iterations = nm.iterations;
  fit.neg_log_likelihood = neg_log_likelihood(data, fit.params);
  return fit;
}

DataSet subsample(const DataSet& data, double fraction, std::uint64_t seed) {
  data.validate();
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ParameterError("subsample fraction must lie in (0, 1]");
  const auto n = data.size();
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (count < 4)
    throw ParameterError("subsample of " + std::to_string(count) + " points is too small");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  const std::vector<std::size_t> keep = draw_without_replacement(std::move(pool), count, seed);
  DataSet out;
  out.label = data.label;
  out.locations.reserve(count);
  out.log_values.reserve(count);
  for (std::size_t i : keep) {
    out.locations.push_back(data.locations[i]);
    out.log_values.push_back(data.log_values[i]);
  }
  return out;
}

DataSet enlarge(const DataSet& base, const DataSet& full, double fraction_step,
                std::uint64_t seed) {
  base.validate();
  full.validate();
  if (!(fraction_step >= 0.0)) throw ParameterError("enlargement step must be nonnegative");

  // Indices of `full` present in / absent from `base`; membership is by
  // exact location (base points are copies of full points).
  std::vector<std::size_t> complement;
  std::size_t b = 0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (b < base.size() && base.locations[b] == full.locations[i])
      ++b;
    else
      complement.push_back(i);
  }
  if (b != base.size()) throw ParameterError("base data set is not a subset of the full set");

  const auto add_count = static_cast<std::size_t>(
      std::llround(fraction_step * static_cast<double>(full.size())));
  if (add_count > complement.size())
    throw ParameterError("cannot add " + std::to_string(add_count) + " points; only " +
                         std::to_string(complement.size()) + " remain outside the base set");

  std::vector<std::size_t> chosen =
      draw_without_replacement(std::move(complement), add_count, seed);
  std::vector<std::size_t> merged;
  merged.reserve(base.size() + add_count);
  b = 0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const bool in_base = b < base.size() && base.locations[b] == full.locations[i];
    if (in_base) ++b;
    const bool added = c < chosen.size() && chosen[c] == i;
    if (added) ++c;
    if (in_base || added) merged.push_back(i);
  }
  DataSet out;
  out.label = base.label;
  out.locations.reserve(merged.size());
  out.log_values.reserve(merged.size());
  for (std::size_t i : merged) {
    out.locations.push_back(full.locations[i]);
    out.log_values.push_back(full.log_values[i]);
  }
  return out;
}

ReDistribution re_distribution(const FitResult& nominal_fit, const DataSet& full,
                               const DataSet& base, int count, const grf::Grid& grid,
                               std::uint64_t seed, double fraction_step) {
  if (count < 1) throw ParameterError("re_distribution needs count >= 1");
  grf::GaussianModel nominal = grf::build_covariance(grid, nominal_fit.params);
  grf::factorize(nominal);

  ReDistribution dist;
  dist.attempted = count;
  for (int k = 0; k < count; ++k) {
    const std::uint64_t seed_k = rng::derive(seed, static_cast<std::uint64_t>(k));
    try {
      const DataSet enlarged = enlarge(base, full, fraction_step, seed_k);
      FitResult fit = fit_mle(enlarged, nominal_fit.params);
      grf::GaussianModel alt = grf::build_covariance(grid, fit.params);
      const double re =
          std::max(0.0, infodiv::relative_entropy_gaussian(alt, nominal).value);
      dist.entries.push_back({re, std::move(fit)});
    } catch (const Error&) {
      ++dist.failures;
    }
  }
  if (dist.failures * 2 > dist.attempted)
    throw ComputationError("re_distribution: " + std::to_string(dist.failures) + " of " +
                           std::to_string(dist.attempted) + " fits failed");

  const int n = static_cast<int>(dist.entries.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return dist.entries[static_cast<std::size_t>(a)].re <
           dist.entries[static_cast<std::size_t>(b)].re;
  });
  dist.idx_min = order.front();
  dist.idx_max = order.back();

  double mean_re = 0.0;
  for (const auto& e : dist.entries) mean_re += e.re;
  mean_re /= n;
  const double median_re =
      n % 2 == 1 ? dist.entries[static_cast<std::size_t>(order[static_cast<std::size_t>(n / 2)])].re
                 : 0.5 * (dist.entries[static_cast<std::size_t>(order[static_cast<std::size_t>(n / 2 - 1)])].re +
                          dist.entries[static_cast<std::size_t>(order[static_cast<std::size_t>(n / 2)])].re);
  const auto nearest = [&](double target) {
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(dist.entries[static_cast<std::size_t>(i)].re - target) <
          std::abs(dist.entries[static_cast<std::size_t>(best)].re - target))
        best = i;
    return best;
  };
  dist.idx_mean = nearest(mean_re);
  dist.idx_median = nearest(median_re);
  return dist;
}

DataSet synthetic_truth(const grf::HyperParams& theta0, int count, double extent,
                        std::uint64_t seed, const std::string& label) {
  if (count < 4) throw ParameterError("synthetic truth needs at least 4 points");
  if (!(extent > 0.0)) throw ParameterError("synthetic truth needs positive extent");
  theta0.validate();
  DataSet data;
  data.label = label;
  data.locations.resize(static_cast<std::size_t>(count));
  const double spacing = extent / count;
  for (int i = 0; i < count; ++i)
    data.locations[static_cast<std::size_t>(i)] = (i + 0.5) * spacing;

  grf::GaussianModel model;
  model.cov = grf::covariance_at(data.locations, theta0);
  model.mean = Eigen::VectorXd::Constant(count, theta0.mu);
  grf::factorize(model);
  const grf::FieldSample sample = grf::sample_log_field(model, seed);
  data.log_values.assign(sample.log_values.data(), sample.log_values.data() + count);
  return data;
}

}  // namespace uq::geostat
