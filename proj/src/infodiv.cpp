#include "uq/infodiv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uq/errors.hpp"

namespace uq::infodiv {

namespace {

// exp(c h) stays representable as long as c * max_h <= kExpGuard.
constexpr double kExpGuard = 700.0;
constexpr double kCMinDefault = 1e-8;

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

DivergenceBound zero_bound(double rho, BoundMethod method) {
  DivergenceBound b;
  b.rho = rho;
  b.method = method;
  b.c_star_minus = kCMinDefault;
  b.c_star_plus = kCMinDefault;
  return b;
}

void fill_side(DivergenceBound& bound, Side side, const XiMinimizeResult& r) {
  if (side == Side::upper) {
    bound.xi_plus = r.xi;
    bound.c_star_plus = r.c_star;
  } else {
    bound.xi_minus = -r.xi;
    bound.c_star_minus = r.c_star;
  }
  bound.boundary_hit = bound.boundary_hit || r.boundary_hit;
}

}  // namespace

const char* bound_method_name(BoundMethod m) {
  switch (m) {
    case BoundMethod::sampled: return "sampled";
    case BoundMethod::bennett: return "bennett";
    case BoundMethod::bennett_ab: return "bennett_ab";
    case BoundMethod::failure_closed_form: return "failure_closed_form";
    case BoundMethod::linearized: return "linearized";
  }
  return "unknown";
}

ObservableSamples ObservableSamples::from_values(std::vector<double> values,
                                                 std::optional<double> lower,
                                                 std::optional<double> upper) {
  if (values.empty()) throw ParameterError("observable samples must be nonempty");
  ObservableSamples s;
  s.mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw ParameterError("non-finite observable sample");
    const double d = v - s.mean;
    ss += d * d;
  }
  s.variance = values.size() > 1 ? ss / static_cast<double>(values.size() - 1) : 0.0;
  if (upper) {
    for (double v : values)
      if (v > *upper) throw ParameterError("sample exceeds declared upper bound");
  }
  if (lower) {
    for (double v : values)
      if (v < *lower) throw ParameterError("sample below declared lower bound");
  }
  s.values = std::move(values);
  s.lower_bound = lower;
  s.upper_bound = upper;
  return s;
}

void ObservableSamples::check_consistent() const {
  ObservableSamples fresh = from_values(values, lower_bound, upper_bound);
  const double scale_mean = std::max(1.0, std::abs(fresh.mean));
  const double scale_var = std::max(1.0, std::abs(fresh.variance));
  if (std::abs(fresh.mean - mean) > 1e-12 * scale_mean ||
      std::abs(fresh.variance - variance) > 1e-12 * scale_var)
    throw ComputationError("stored sample moments disagree with recomputation");
}

CumulantModel::CumulantModel(std::vector<double> centered, std::vector<double> weights) {
  const std::size_t n = centered.size();
  if (n == 0) throw ParameterError("cumulant model needs at least one atom");
  if (!weights.empty() && weights.size() != n)
    throw DimensionError("cumulant weights/values length mismatch");
  const double w_uniform = 1.0 / static_cast<double>(n);
  points_.reserve(n);
  max_h_ = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? w_uniform : weights[i];
    if (w < 0.0) throw ParameterError("cumulant weights must be nonnegative");
    if (w == 0.0) continue;
    points_.emplace_back(centered[i], w);
    max_h_ = std::max(max_h_, centered[i]);
    variance_ += w * centered[i] * centered[i];
  }
  if (points_.empty()) throw ParameterError("cumulant model has zero total weight");
}

CumulantModel CumulantModel::from_samples(const ObservableSamples& samples, Side side) {
  const double sign = side == Side::upper ? 1.0 : -1.0;
  std::vector<double> centered(samples.values.size());
  for (std::size_t i = 0; i < centered.size(); ++i)
    centered[i] = sign * (samples.values[i] - samples.mean);
  return CumulantModel(std::move(centered));
}

CumulantModel CumulantModel::indicator(double p, Side side) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("indicator cumulant needs p in (0,1)");
  const double sign = side == Side::upper ? 1.0 : -1.0;
  return CumulantModel({sign * (1.0 - p), sign * (-p)}, {p, 1.0 - p});
}

CumulantModel CumulantModel::bennett(double spread_above_mean, double variance) {
  const double b = spread_above_mean;
  if (!(b > 0.0)) throw ParameterError("bennett bound needs upper bound above the mean");
  if (!(variance > 0.0)) throw ParameterError("bennett cumulant needs positive variance");
  const double denom = b * b + variance;
  return CumulantModel({-variance / b, b}, {b * b / denom, variance / denom});
}

CumulantModel CumulantModel::bennett_ab(double mean, double lower, double upper) {
  if (!(lower < upper)) throw ParameterError("bennett_ab needs lower < upper");
  if (!(mean > lower && mean < upper))
    throw ParameterError("bennett_ab needs the mean strictly inside (a, b)");
  const double width = upper - lower;
  return CumulantModel({upper - mean, lower - mean},
                       {(mean - lower) / width, (upper - mean) / width});
}

double CumulantModel::lambda(double c) const {
  if (c == 0.0) return 0.0;
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& [h, w] : points_) shift = std::max(shift, c * h);
  double s0 = 0.0;
  for (const auto& [h, w] : points_) s0 += w * std::exp(c * h - shift);
  return (shift + std::log(s0)) / c;
}

double CumulantModel::c_max() const {
  return max_h_ > 0.0 ? kExpGuard / max_h_ : std::numeric_limits<double>::infinity();
}

void CumulantModel::derivs(double c, double& value, double& d1, double& d2) const {
  if (c == 0.0) throw ParameterError("cumulant derivatives undefined at c = 0");
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& [h, w] : points_) shift = std::max(shift, c * h);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (const auto& [h, w] : points_) {
    const double e = w * std::exp(c * h - shift);
    s0 += e;
    s1 += h * e;
    s2 += h * h * e;
  }
  const double k = shift + std::log(s0);   // K(c) = log sum w e^{ch}
  const double k1 = s1 / s0;               // K'(c)
  const double k2 = s2 / s0 - k1 * k1;     // K''(c)
  value = k / c;
  d1 = k1 / c - k / (c * c);
  d2 = k2 / c - 2.0 * k1 / (c * c) + 2.0 * k / (c * c * c);
}

XiMinimizeResult minimize_xi(const ScalarCumulant& model, double rho, double c_init,
                             double c_min) {
  if (rho < 0.0) throw ParameterError("budget rho must be nonnegative");
  XiMinimizeResult result;
  if (rho == 0.0 || model.degenerate()) {
    result.c_star = c_min;
    result.xi = 0.0;
    return result;
  }
  const double c_max = std::max(model.c_max(), c_min * 2.0);

  const auto xi_value = [&](double c) { return model.lambda(c) + rho / c; };
  // g(c) = d xi / dc and its derivative; g has a unique sign change from
  // negative to positive on (0, inf) when an interior minimum exists.
  const auto xi_grad = [&](double c, double& g, double& dg) {
    double v, d1, d2;
    model.derivs(c, v, d1, d2);
    g = d1 - rho / (c * c);
    dg = d2 + 2.0 * rho / (c * c * c);
  };

  double c = std::clamp(c_init, c_min, c_max);
  double g, dg;
  xi_grad(c, g, dg);
  double lo = c_min, hi = c_max;
  if (g < 0.0) {
    lo = c;
    while (true) {
      double next = std::min(lo * 4.0, c_max);
      xi_grad(next, g, dg);
      if (g >= 0.0) {
        hi = next;
        break;
      }
      lo = next;
      if (next >= c_max) {
        // Minimum beyond the overflow guard: return the boundary value.
        result.c_star = c_max;
        result.xi = xi_value(c_max);
        result.boundary_hit = true;
        return result;
      }
    }
  } else {
    hi = c;
    while (true) {
      double next = std::max(hi / 4.0, c_min);
      xi_grad(next, g, dg);
      if (g < 0.0) {
        lo = next;
        break;
      }
      hi = next;
      if (next <= c_min) {
        result.c_star = c_min;
        result.xi = xi_value(c_min);
        result.boundary_hit = true;
        return result;
      }
    }
  }

  // Safeguarded Newton for the root of g on [lo, hi].
  c = 0.5 * (lo + hi);
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    result.iterations = it + 1;
    xi_grad(c, g, dg);
    if (g < 0.0)
      lo = c;
    else
      hi = c;
    double next = dg > 0.0 ? c - g / dg : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - c) <= 1e-8 * (1.0 + c)) {
      c = next;
      converged = true;
      break;
    }
    c = next;
  }
  if (!converged) {
    // Golden-section fallback on xi itself.
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = xi_value(x1), f2 = xi_value(x2);
    while (b - a > 1e-10 * (1.0 + a)) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kInvPhi * (b - a);
        f1 = xi_value(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kInvPhi * (b - a);
        f2 = xi_value(x2);
      }
    }
    c = 0.5 * (a + b);
  }
  result.c_star = c;
  result.xi = xi_value(c);
  if (!std::isfinite(result.xi)) throw ComputationError("non-finite divergence bound value");
  return result;
}

RelEntropyResult relative_entropy_gaussian(const grf::GaussianModel& alt,
                                           const grf::GaussianModel& nom) {
  if (alt.dim() != nom.dim())
    throw DimensionError("relative entropy needs models of equal dimension, got " +
                         std::to_string(alt.dim()) + " vs " + std::to_string(nom.dim()));
  const grf::GaussianModel* alt_p = &alt;
  const grf::GaussianModel* nom_p = &nom;
  grf::GaussianModel alt_local, nom_local;
  if (!alt.factorized()) {
    alt_local = alt;
    grf::factorize(alt_local);
    alt_p = &alt_local;
  }
  if (!nom.factorized()) {
    nom_local = nom;
    grf::factorize(nom_local);
    nom_p = &nom_local;
  }

  const auto& l_alt = alt_p->chol;
  const auto& l_nom = nom_p->chol;
  RelEntropyResult r;
  r.dimension = alt.dim();
  r.logdet_terms.first = 2.0 * l_alt.diagonal().array().log().sum();
  r.logdet_terms.second = 2.0 * l_nom.diagonal().array().log().sum();
  // trace(Sigma_nom^-1 Sigma_alt) = || L_nom^-1 L_alt ||_F^2
  Eigen::MatrixXd x = l_nom.triangularView<Eigen::Lower>().solve(l_alt);
  r.trace_term = x.squaredNorm();
  Eigen::VectorXd dm = l_nom.triangularView<Eigen::Lower>().solve(
      Eigen::VectorXd(alt_p->mean - nom_p->mean));
  r.mahalanobis_term = dm.squaredNorm();
  r.value = 0.5 * (r.logdet_terms.second - r.logdet_terms.first + r.trace_term +
                   r.mahalanobis_term - r.dimension);
  return r;
}

Eigen::Matrix4d fim_gaussian(const grf::Grid& grid, const grf::HyperParams& params) {
  grf::GaussianModel model = grf::build_covariance(grid, params);
  grf::factorize(model);
  const grf::CovDerivatives d = grf::cov_derivatives(grid, params);

  const auto lower = model.chol.triangularView<Eigen::Lower>();
  Eigen::Matrix4d fim = Eigen::Matrix4d::Zero();

  // Mean derivative is nonzero only for mu: ones' Sigma^-1 ones.
  Eigen::VectorXd y = lower.solve(d.dmean[0]);
  fim(0, 0) = y.squaredNorm();

  // Whitened covariance derivatives M_k = L^-1 dSigma_k L^-T (symmetric).
  std::array<Eigen::MatrixXd, 4> whitened;
  for (int k = 1; k < 4; ++k) {
    Eigen::MatrixXd half = lower.solve(d.dcov[static_cast<std::size_t>(k)]);
    whitened[static_cast<std::size_t>(k)] = lower.solve(half.transpose());
  }
  for (int i = 1; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      const double tr = whitened[static_cast<std::size_t>(i)]
                            .cwiseProduct(whitened[static_cast<std::size_t>(j)])
                            .sum();
      fim(i, j) = fim(j, i) = 0.5 * tr;
    }
  }
  return fim;
}

double screening_index(const grf::HyperParams& params, const Eigen::Matrix4d& fim,
                       grf::Param direction, bool* clamped) {
  const int d = static_cast<int>(direction);
  double diag = fim(d, d);
  if (clamped) *clamped = false;
  if (diag < 0.0) {
    diag = 0.0;
    if (clamped) *clamped = true;
  }
  return params.component(direction) * std::sqrt(diag);
}

double cumulant_estimator(const ObservableSamples& samples, double c) {
  if (samples.values.empty()) throw ParameterError("cumulant of empty samples");
  if (c == 0.0) return 0.0;
  return CumulantModel::from_samples(samples, Side::upper).lambda(c);
}

double optimal_c_init(double variance, double rho) {
  if (!(variance > 0.0)) throw ParameterError("optimal_c_init needs positive variance");
  if (rho < 0.0) throw ParameterError("budget rho must be nonnegative");
  return std::sqrt(2.0 * rho) / std::sqrt(variance);
}

double xi_linearized(double variance, double rho) {
  if (variance < 0.0) throw ParameterError("variance must be nonnegative");
  if (rho < 0.0) throw ParameterError("budget rho must be nonnegative");
  return std::sqrt(variance) * std::sqrt(2.0 * rho);
}

DivergenceBound xi_bound(const ObservableSamples& samples, double rho, Side side) {
  if (rho < 0.0) throw ParameterError("budget rho must be nonnegative");
  DivergenceBound bound = zero_bound(rho, BoundMethod::sampled);
  if (rho == 0.0 || samples.variance == 0.0) return bound;
  CumulantModel model = CumulantModel::from_samples(samples, side);
  const double c_init = optimal_c_init(samples.variance, rho);
  fill_side(bound, side, minimize_xi(model, rho, c_init));
  return bound;
}

DivergenceBound xi_bound_two_sided(const ObservableSamples& samples, double rho) {
  DivergenceBound up = xi_bound(samples, rho, Side::upper);
  DivergenceBound lo = xi_bound(samples, rho, Side::lower);
  up.xi_minus = lo.xi_minus;
  up.c_star_minus = lo.c_star_minus;
  up.boundary_hit = up.boundary_hit || lo.boundary_hit;
  return up;
}

std::pair<double, double> failure_prob_interval(double p, double rho) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("failure probability must lie in [0, 1]");
  if (rho < 0.0) throw ParameterError("budget rho must be nonnegative");
  if (rho == 0.0 || p == 0.0 || p == 1.0) return {p, p};
  const double c_init = optimal_c_init(p * (1.0 - p), rho);
  XiMinimizeResult up = minimize_xi(CumulantModel::indicator(p, Side::upper), rho, c_init);
  XiMinimizeResult lo = minimize_xi(CumulantModel::indicator(p, Side::lower), rho, c_init);
  return {std::clamp(p - lo.xi, 0.0, 1.0), std::clamp(p + up.xi, 0.0, 1.0)};
}

BoundedMoments BoundedMoments::of(const ObservableSamples& samples) {
  return {samples.mean, samples.variance, samples.lower_bound, samples.upper_bound};
}

double bennett_bound(const BoundedMoments& moments, double c) {
  if (!moments.upper_bound) throw StateError("bennett bound requires an upper bound");
  if (c < 0.0) throw ParameterError("bennett bound requires c >= 0");
  const double spread = *moments.upper_bound - moments.mean;
  if (!(spread > 0.0)) throw ParameterError("bennett bound requires upper bound above the mean");
  if (c == 0.0 || moments.variance <= 0.0) return 0.0;
  return CumulantModel::bennett(spread, moments.variance).lambda(c);
}

double bennett_bound(const ObservableSamples& samples, double c) {
  return bennett_bound(BoundedMoments::of(samples), c);
}

double bennett_ab_bound(const BoundedMoments& moments, double c) {
  if (!moments.lower_bound || !moments.upper_bound)
    throw StateError("bennett_ab bound requires both support bounds");
  if (!(*moments.lower_bound < *moments.upper_bound))
    throw ParameterError("bennett_ab bound requires lower < upper");
  const double m = moments.mean;
  if (m < *moments.lower_bound || m > *moments.upper_bound)
    throw ParameterError("bennett_ab bound requires the mean inside [a, b]");
  if (c == 0.0) return 0.0;
  // All mass at an endpoint: the centered variable is 0 almost surely.
  if (m == *moments.lower_bound || m == *moments.upper_bound) return 0.0;
  return CumulantModel::bennett_ab(m, *moments.lower_bound, *moments.upper_bound).lambda(c);
}

double bennett_ab_bound(const ObservableSamples& samples, double c) {
  return bennett_ab_bound(BoundedMoments::of(samples), c);
}

DivergenceBound concentration_xi(const BoundedMoments& moments, double rho,
                                 ConcentrationVariant variant, Side side) {
  if (rho < 0.0) throw ParameterError("budget rho must be nonnegative");
  const BoundMethod method =
      variant == ConcentrationVariant::bennett ? BoundMethod::bennett : BoundMethod::bennett_ab;
  DivergenceBound bound = zero_bound(rho, method);
  if (rho == 0.0) return bound;

  // Negating the observable swaps and negates the support bounds.
  BoundedMoments use = moments;
  if (side == Side::lower) {
    use.mean = -moments.mean;
    use.lower_bound = moments.upper_bound ? std::optional<double>(-*moments.upper_bound)
                                          : std::nullopt;
    use.upper_bound = moments.lower_bound ? std::optional<double>(-*moments.lower_bound)
                                          : std::nullopt;
  }

  if (variant == ConcentrationVariant::bennett) {
    if (!use.upper_bound)
      throw StateError("bennett concentration bound requires an upper bound on this side");
    const double spread = *use.upper_bound - use.mean;
    if (!(spread > 0.0))
      throw ParameterError("bennett bound requires upper bound above the mean");
    if (use.variance <= 0.0) return bound;
    CumulantModel model = CumulantModel::bennett(spread, use.variance);
    fill_side(bound, side, minimize_xi(model, rho, optimal_c_init(model.variance(), rho)));
    return bound;
  }

  if (!use.lower_bound || !use.upper_bound)
    throw StateError("bennett_ab concentration bound requires both support bounds");
  if (use.mean <= *use.lower_bound || use.mean >= *use.upper_bound) return bound;
  CumulantModel model = CumulantModel::bennett_ab(use.mean, *use.lower_bound, *use.upper_bound);
  fill_side(bound, side, minimize_xi(model, rho, optimal_c_init(model.variance(), rho)));
  return bound;
}

DivergenceBound concentration_xi(const ObservableSamples& samples, double rho,
                                 ConcentrationVariant variant, Side side) {
  return concentration_xi(BoundedMoments::of(samples), rho, variant, side);
}

double estimator_variance(const ObservableSamples& samples, double c_star, std::size_t M) {
  if (!(c_star > 0.0)) throw ParameterError("estimator variance needs c* > 0");
  if (M < 2) throw ParameterError("estimator variance needs M >= 2");
  if (samples.values.empty()) throw ParameterError("estimator variance of empty samples");
  // Population moments of exp(c*(H - mean)); the shift cancels in the ratio.
  double shift = -std::numeric_limits<double>::infinity();
  for (double v : samples.values) shift = std::max(shift, c_star * (v - samples.mean));
  double m1 = 0.0, m2 = 0.0;
  for (double v : samples.values) {
    const double e = std::exp(c_star * (v - samples.mean) - shift);
    m1 += e;
    m2 += e * e;
  }
  const double inv_n = 1.0 / static_cast<double>(samples.values.size());
  m1 *= inv_n;
  m2 *= inv_n;
  const double var = m2 - m1 * m1;
  if (!(var > 0.0)) return 0.0;
  return var / (m1 * m1 * c_star * c_star * static_cast<double>(M));
}

}  // namespace uq::infodiv
