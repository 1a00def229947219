#include "uq/grf.hpp"

#include <cmath>
#include <sstream>

#include "uq/errors.hpp"
#include "uq/rng.hpp"

namespace uq::grf {

Param param_from_name(const std::string& name) {
  for (int i = 0; i < 4; ++i) {
    if (name == kParamNames[static_cast<std::size_t>(i)]) return static_cast<Param>(i);
  }
  throw ParameterError("unknown hyperparameter direction '" + name + "'");
}

void HyperParams::validate() const {
  if (!(ell > 0.0)) throw ParameterError("ell must be positive, got " + std::to_string(ell));
  if (!(sigma2 >= 0.0))
    throw ParameterError("sigma2 must be nonnegative, got " + std::to_string(sigma2));
  if (!(tau2 >= 0.0))
    throw ParameterError("tau2 must be nonnegative, got " + std::to_string(tau2));
  if (!(sigma2 + tau2 > 0.0))
    throw ParameterError("sigma2 + tau2 must be positive (field needs pointwise variance)");
}

double HyperParams::component(Param p) const {
  switch (p) {
    case Param::mu: return mu;
    case Param::sigma2: return sigma2;
    case Param::ell: return ell;
    case Param::tau2: return tau2;
  }
  throw ParameterError("invalid Param index");
}

HyperParams HyperParams::with_component(Param p, double value) const {
  HyperParams out = *this;
  switch (p) {
    case Param::mu: out.mu = value; break;
    case Param::sigma2: out.sigma2 = value; break;
    case Param::ell: out.ell = value; break;
    case Param::tau2: out.tau2 = value; break;
  }
  return out;
}

HyperParams HyperParams::perturbed(Param p, double eps) const {
  HyperParams out = with_component(p, component(p) + eps);
  try {
    out.validate();
  } catch (const ParameterError& e) {
    std::ostringstream msg;
    msg << "perturbation in direction " << kParamNames[static_cast<std::size_t>(p)]
        << " by " << eps << " leaves the parameter domain: " << e.what();
    throw ParameterError(msg.str());
  }
  return out;
}

Grid Grid::cell_centers(int n, double lo, double hi) {
  if (n < 2) throw ParameterError("grid needs n >= 2 cells, got " + std::to_string(n));
  if (!(hi > lo)) throw ParameterError("grid needs hi > lo");
  Grid g;
  g.n = n;
  g.lo = lo;
  g.hi = hi;
  g.spacing = (hi - lo) / n;
  g.points.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.points[static_cast<std::size_t>(i)] = lo + (i + 0.5) * g.spacing;
  return g;
}

void Grid::validate() const {
  if (n < 2) throw ParameterError("grid needs n >= 2 cells");
  if (static_cast<int>(points.size()) != n) throw DimensionError("grid points/n mismatch");
  if (!(spacing > 0.0)) throw ParameterError("grid spacing must be positive");
  for (int i = 1; i < n; ++i) {
    const double step = points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(i - 1)];
    if (!(step > 0.0)) throw ParameterError("grid points must be strictly increasing");
    if (std::abs(step - spacing) > 1e-12 * std::abs(spacing))
      throw ParameterError("grid points must be uniformly spaced");
  }
}

Eigen::MatrixXd covariance_at(std::span<const double> points, const HyperParams& params) {
  params.validate();
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd cov(n, n);
  const double denom = 2.0 * params.ell * params.ell;
  for (Eigen::Index j = 0; j < n; ++j) {
    cov(j, j) = params.sigma2 + params.tau2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double r = points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)];
      const double value = params.sigma2 * std::exp(-(r * r) / denom);
      cov(i, j) = value;
      cov(j, i) = value;
    }
  }
  return cov;
}

GaussianModel build_covariance(const Grid& grid, const HyperParams& params) {
  grid.validate();
  GaussianModel model;
  model.cov = covariance_at(grid.points, params);
  model.mean = Eigen::VectorXd::Constant(grid.n, params.mu);
  return model;
}

void factorize(GaussianModel& model) {
  if (model.cov.rows() != model.cov.cols() || model.cov.rows() != model.mean.size())
    throw DimensionError("covariance/mean dimension mismatch");
  const double diag_mean = model.cov.diagonal().mean();
  static constexpr std::array<double, 5> kEps{0.0, 1e-12, 1e-10, 1e-8, 1e-6};
  for (double eps : kEps) {
    const double jitter = eps * diag_mean;
    Eigen::MatrixXd shifted = model.cov;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      model.chol = llt.matrixL();
      model.jitter_used = jitter;
      return;
    }
  }
  throw SingularError("covariance not factorizable even with jitter " +
                      std::to_string(kEps.back() * diag_mean));
}

FieldSample sample_log_field(const GaussianModel& model, std::uint64_t seed) {
  if (!model.factorized()) throw StateError("sample_log_field requires a factorized model");
  rng::Stream stream(seed);
  Eigen::VectorXd z(model.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = stream.next_normal();
  FieldSample sample;
  sample.seed = seed;
  sample.log_values = model.mean + model.chol.triangularView<Eigen::Lower>() * z;
  sample.values.resize(sample.log_values.size());
  // Componentwise std::exp so values[i] is exactly exp(log_values[i]);
  // Eigen's vectorized exp can differ by an ulp.
  for (Eigen::Index i = 0; i < sample.values.size(); ++i)
    sample.values(i) = std::exp(sample.log_values(i));
  return sample;
}

CovDerivatives cov_derivatives(const Grid& grid, const HyperParams& params) {
  grid.validate();
  params.validate();
  const Eigen::Index n = grid.n;
  CovDerivatives d;

  d.dmean[0] = Eigen::VectorXd::Ones(n);
  for (int k = 1; k < 4; ++k) d.dmean[static_cast<std::size_t>(k)] = Eigen::VectorXd::Zero(n);

  d.dcov[0] = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd dsigma2(n, n);
  Eigen::MatrixXd dell(n, n);
  const double denom = 2.0 * params.ell * params.ell;
  const double ell3 = params.ell * params.ell * params.ell;
  for (Eigen::Index j = 0; j < n; ++j) {
    dsigma2(j, j) = 1.0;
    dell(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double r = grid.points[static_cast<std::size_t>(i)] - grid.points[static_cast<std::size_t>(j)];
      const double corr = std::exp(-(r * r) / denom);
      dsigma2(i, j) = dsigma2(j, i) = corr;
      const double dl = params.sigma2 * corr * (r * r / ell3);
      dell(i, j) = dell(j, i) = dl;
    }
  }
  d.dcov[1] = std::move(dsigma2);
  d.dcov[2] = std::move(dell);
  d.dcov[3] = Eigen::MatrixXd::Identity(n, n);
  return d;
}

}  // namespace uq::grf
