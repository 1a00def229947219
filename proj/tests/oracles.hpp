// Independent reference implementations used only by tests. These cross-check
// the library through different algorithms (dense inverses, grid searches,
// finite differences) and must not call the code paths they verify.
#ifndef UQ_TESTS_ORACLES_HPP
#define UQ_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracles {

// Plain golden-section minimization on [a, b].
inline double golden_minimize(const std::function<double(double)>& f, double a, double b,
                              double tol = 1e-12) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol * (1.0 + std::abs(a))) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

// Brute force: scan a log-spaced grid of c values, then refine the best
// bracket by golden section. Returns the minimal value.
inline double grid_then_golden_min(const std::function<double(double)>& f, double c_lo,
                                   double c_hi, int grid_points = 2000) {
  double best_c = c_lo;
  double best_f = f(c_lo);
  const double ratio = std::log(c_hi / c_lo);
  for (int i = 1; i < grid_points; ++i) {
    const double c = c_lo * std::exp(ratio * i / (grid_points - 1.0));
    const double v = f(c);
    if (v < best_f) {
      best_f = v;
      best_c = c;
    }
  }
  const double a = std::max(c_lo, best_c / 3.0);
  const double b = std::min(c_hi, best_c * 3.0);
  const double c_star = golden_minimize(f, a, b);
  return std::min(best_f, f(c_star));
}

// Gaussian log-density through a dense LU inverse and determinant; a
// different route than the Cholesky-based library code.
inline double dense_mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov) {
  const Eigen::Index d = x.size();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  const Eigen::MatrixXd inv = lu.inverse();
  const double logdet = std::log(lu.determinant());
  const Eigen::VectorXd r = x - mean;
  return -0.5 * (logdet + r.dot(inv * r) + d * std::log(2.0 * std::numbers::pi));
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace oracles

#endif  // UQ_TESTS_ORACLES_HPP
