#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "uq/errors.hpp"
#include "uq/geostat.hpp"
#include "uq/infodiv.hpp"
#include "uq/mcengine.hpp"
#include "uq/rng.hpp"

using namespace uq;

namespace {

geostat::DataSet toy_data() {
  geostat::DataSet d;
  d.locations = {0.0, 0.1, 0.25, 0.4, 0.6, 0.7, 0.85, 1.0};
  d.log_values = {0.3, -0.1, 0.5, 0.2, -0.4, 0.1, 0.6, -0.2};
  d.label = "toy";
  return d;
}

}  // namespace

TEST_CASE("csv ingestion") {
  SUBCASE("logperm passthrough") {
    std::istringstream in("# comment\nx,logperm\n0,1.5\n1,2.5\n2,0.0\n3,-1.0\n");
    const geostat::DataSet d = geostat::ingest_csv(in);
    CHECK(d.size() == 4);
    CHECK(d.log_values[0] == 1.5);
    CHECK(d.log_values[3] == -1.0);
  }

  SUBCASE("perm values are logged") {
    std::istringstream in("x,perm\n0,1.0\n1,2.718281828459045\n2,1.0\n3,1.0\n");
    const geostat::DataSet d = geostat::ingest_csv(in);
    CHECK(d.log_values[0] == 0.0);
    CHECK(d.log_values[1] == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("duplicate location") {
    std::istringstream in("x,logperm\n0,1\n1,2\n1,3\n2,4\n");
    CHECK_THROWS_AS(geostat::ingest_csv(in), ParseError);
  }

  SUBCASE("malformed row reports the line") {
    std::istringstream in("x,logperm\n0,1\n1,zzz\n2,3\n3,4\n");
    try {
      geostat::ingest_csv(in);
      CHECK(false);
    } catch (const ParseError& e) {
      CHECK(e.line_number == 3);
    }
  }

  SUBCASE("bad header") {
    std::istringstream in("x,conductivity\n0,1\n");
    CHECK_THROWS_AS(geostat::ingest_csv(in), ParseError);
  }
}

TEST_CASE("negative log likelihood") {
  const geostat::DataSet data = toy_data();
  const grf::HyperParams params{0.1, 0.3, 0.2, 0.1};

  SUBCASE("matches a dense-algebra evaluation") {
    const auto n = static_cast<Eigen::Index>(data.size());
    const Eigen::MatrixXd cov = grf::covariance_at(data.locations, params);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i)
      r(i) = data.log_values[static_cast<std::size_t>(i)] - params.mu;
    const Eigen::MatrixXd inv = cov.inverse();
    const double dense = 0.5 * (std::log(cov.determinant()) + r.dot(inv * r) +
                                static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
    CHECK(geostat::neg_log_likelihood(data, params) == doctest::Approx(dense).epsilon(1e-8));
  }

  SUBCASE("translation invariance") {
    const double base = geostat::neg_log_likelihood(data, params);
    geostat::DataSet shifted = data;
    for (double& v : shifted.log_values) v += 3.7;
    grf::HyperParams shifted_params = params;
    shifted_params.mu += 3.7;
    CHECK(geostat::neg_log_likelihood(shifted, shifted_params) ==
          doctest::Approx(base).epsilon(1e-12));
  }

  SUBCASE("pure-nugget maximum likelihood stationarity") {
    const double n = static_cast<double>(data.size());
    const double mean = oracles::mean_of(data.log_values);
    double biased_var = 0.0;
    for (double v : data.log_values) biased_var += (v - mean) * (v - mean);
    biased_var /= n;
    const grf::HyperParams mle{mean, 0.0, 0.2, biased_var};
    const auto nll_at = [&](double mu, double tau2) {
      return geostat::neg_log_likelihood(data, {mu, 0.0, 0.2, tau2});
    };
    const double h_mu = 1e-6;
    const double h_t = 1e-6 * biased_var;
    const double grad_mu = (nll_at(mean + h_mu, biased_var) - nll_at(mean - h_mu, biased_var)) /
                           (2.0 * h_mu);
    const double grad_t = (nll_at(mean, biased_var + h_t) - nll_at(mean, biased_var - h_t)) /
                          (2.0 * h_t);
    CHECK(std::abs(grad_mu) < 1e-4);
    CHECK(std::abs(grad_t) < 1e-4);
    CHECK(geostat::neg_log_likelihood(data, mle) <=
          geostat::neg_log_likelihood(data, {mean + 0.3, 0.0, 0.2, biased_var}));
  }
}

TEST_CASE("maximum likelihood fitting") {
  SUBCASE("synthetic recovery of the total sill") {
    const grf::HyperParams truth{1.0, 0.5, 0.02, 0.5};
    const geostat::DataSet data = geostat::synthetic_truth(truth, 200, 1.0, 5);
    const geostat::FitResult fit = geostat::fit_mle(data, geostat::default_init(data));
    CHECK(fit.converged);
    const double total = fit.params.sigma2 + fit.params.tau2;
    CHECK(total > 0.7 * 1.0);
    CHECK(total < 1.3 * 1.0);
    CHECK(fit.params.ell > 0.01);
    CHECK(fit.params.ell < 0.04);
  }

  SUBCASE("stored objective matches a re-evaluation") {
    const geostat::DataSet data = toy_data();
    const geostat::FitResult fit = geostat::fit_mle(data, geostat::default_init(data));
    CHECK(fit.neg_log_likelihood ==
          doctest::Approx(geostat::neg_log_likelihood(data, fit.params)).epsilon(1e-12));
  }

  SUBCASE("degenerate constant data drives the nugget to the floor") {
    geostat::DataSet flat;
    flat.locations = {0.0, 0.3, 0.6, 1.0};
    flat.log_values = {1.0, 1.0, 1.0, 1.0};
    const geostat::FitResult fit = geostat::fit_mle(flat, geostat::default_init(flat));
    CHECK(fit.converged);
    CHECK(fit.params.tau2 <= 1e-8);
  }

  SUBCASE("refit from the optimum is a fixed point") {
    const geostat::DataSet data = toy_data();
    const geostat::FitResult first = geostat::fit_mle(data, geostat::default_init(data));
    const geostat::FitResult second = geostat::fit_mle(data, first.params);
    CHECK(std::abs(second.neg_log_likelihood - first.neg_log_likelihood) <= 1e-6);
  }
}

TEST_CASE("subsampling") {
  const grf::HyperParams truth{0.0, 1.0, 0.1, 0.2};
  const geostat::DataSet full = geostat::synthetic_truth(truth, 100, 1.0, 3);

  SUBCASE("full fraction is the identity") {
    const geostat::DataSet s = geostat::subsample(full, 1.0, 9);
    CHECK(s.locations == full.locations);
    CHECK(s.log_values == full.log_values);
  }

  SUBCASE("half fraction keeps an ordered subset") {
    const geostat::DataSet s = geostat::subsample(full, 0.5, 9);
    CHECK(s.size() == 50);
    std::size_t j = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      while (j < full.size() && full.locations[j] != s.locations[i]) ++j;
      CHECK(j < full.size());
    }
  }

  SUBCASE("deterministic in the seed") {
    const geostat::DataSet a = geostat::subsample(full, 0.5, 9);
    const geostat::DataSet b = geostat::subsample(full, 0.5, 9);
    const geostat::DataSet c = geostat::subsample(full, 0.5, 10);
    CHECK(a.locations == b.locations);
    CHECK(a.locations != c.locations);
  }

  SUBCASE("too-small output is rejected") {
    CHECK_THROWS_AS(geostat::subsample(full, 0.02, 9), ParameterError);
  }
}

TEST_CASE("enlargement") {
  const grf::HyperParams truth{0.0, 1.0, 0.1, 0.2};
  const geostat::DataSet full = geostat::synthetic_truth(truth, 100, 1.0, 3);
  const geostat::DataSet base = geostat::subsample(full, 0.5, 9);

  SUBCASE("set algebra identities") {
    const geostat::DataSet grown = geostat::enlarge(base, full, 0.1, 21);
    CHECK(grown.size() == base.size() + 10);
    // base is contained in grown, grown in full
    std::size_t hits = 0;
    for (double x : base.locations)
      hits += std::count(grown.locations.begin(), grown.locations.end(), x) == 1 ? 1u : 0u;
    CHECK(hits == base.size());
    for (double x : grown.locations)
      CHECK(std::count(full.locations.begin(), full.locations.end(), x) == 1);
    CHECK(std::is_sorted(grown.locations.begin(), grown.locations.end()));
  }

  SUBCASE("covering the complement reproduces the full set") {
    const geostat::DataSet grown = geostat::enlarge(base, full, 0.5, 21);
    CHECK(grown.locations == full.locations);
  }

  SUBCASE("infeasible step is rejected") {
    CHECK_THROWS_AS(geostat::enlarge(base, full, 0.6, 21), ParameterError);
  }

  SUBCASE("foreign base is rejected") {
    geostat::DataSet foreign = base;
    foreign.locations[2] += 1e-7;
    CHECK_THROWS_AS(geostat::enlarge(foreign, full, 0.1, 21), ParameterError);
  }
}

TEST_CASE("relative entropy distribution over refits") {
  const grf::HyperParams truth{1.0, 0.5, 0.02, 0.5};
  const geostat::DataSet full = geostat::synthetic_truth(truth, 150, 1.0, 13);
  const geostat::DataSet base = geostat::subsample(full, 0.7, 29);
  const geostat::FitResult nominal = geostat::fit_mle(base, geostat::default_init(base));
  const grf::Grid grid = grf::Grid::cell_centers(16, 0.0, full.extent());

  SUBCASE("empty enlargement reproduces the nominal model") {
    const auto dist = geostat::re_distribution(nominal, full, base, 1, grid, 33, 0.0);
    REQUIRE(dist.entries.size() == 1);
    CHECK(dist.entries[0].re < 1e-6);
  }

  SUBCASE("max-RE selection tends to carry the larger weak error") {
    // Wider information distance should show up as a larger shift of the
    // mean solution value; checked as a majority over repetitions.
    mc::RunConfig cfg;
    cfg.samples = 400;
    cfg.runs = 1;
    cfg.grid_n = 16;
    cfg.domain_hi = full.extent();
    mc::GoalFunctional value;
    value.kind = mc::GoalFunctional::Kind::scaled_value;
    value.eval_point = cfg.domain_hi;
    value.scale = 1.0;
    cfg.goals = {value};

    int majority = 0;
    const int reps = 10;
    for (int rep = 0; rep < reps; ++rep) {
      const geostat::DataSet data = geostat::synthetic_truth(truth, 120, 1.0, rng::derive(40, rep));
      const geostat::DataSet rep_base = geostat::subsample(data, 0.7, rng::derive(41, rep));
      const geostat::FitResult fit = geostat::fit_mle(rep_base, geostat::default_init(rep_base));
      const grf::Grid rep_grid = grf::Grid::cell_centers(16, 0.0, data.extent());
      const auto dist =
          geostat::re_distribution(fit, data, rep_base, 8, rep_grid, rng::derive(42, rep), 0.1);
      grf::GaussianModel nominal = grf::build_covariance(rep_grid, fit.params);
      grf::factorize(nominal);
      cfg.seed = rng::derive(43, rep);
      const auto fd_of = [&](int idx) {
        grf::GaussianModel alt = grf::build_covariance(
            rep_grid, dist.entries[static_cast<std::size_t>(idx)].fit.params);
        grf::factorize(alt);
        return std::abs(mc::weak_error_fd(nominal, alt, value, cfg, 1.0));
      };
      if (fd_of(dist.idx_max) >= fd_of(dist.idx_median)) ++majority;
    }
    CHECK(majority * 2 > reps);
  }

  SUBCASE("distribution entries are sane and selections are members") {
    const auto dist = geostat::re_distribution(nominal, full, base, 12, grid, 33, 0.1);
    CHECK(dist.attempted == 12);
    CHECK(dist.entries.size() + dist.failures == 12u);
    for (const auto& e : dist.entries) {
      CHECK(e.re >= 0.0);
      CHECK(std::isfinite(e.re));
    }
    for (int idx : {dist.idx_max, dist.idx_min, dist.idx_mean, dist.idx_median}) {
      CHECK(idx >= 0);
      CHECK(idx < static_cast<int>(dist.entries.size()));
    }
    double re_max = 0.0, re_min = 1e300;
    for (const auto& e : dist.entries) {
      re_max = std::max(re_max, e.re);
      re_min = std::min(re_min, e.re);
    }
    CHECK(dist.entries[static_cast<std::size_t>(dist.idx_max)].re == re_max);
    CHECK(dist.entries[static_cast<std::size_t>(dist.idx_min)].re == re_min);
  }
}
