#ifndef UQ_NELDER_MEAD_HPP
#define UQ_NELDER_MEAD_HPP

#include <Eigen/Dense>
#include <functional>

namespace uq::opt {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double fx = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Downhill simplex with standard coefficients (reflect 1, expand 2,
// contract 1/2, shrink 1/2). Converges when the simplex diameter falls
// under rel_tol * (1 + |x_best|), or gives up after max_iter iterations.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, double rel_tol = 1e-6,
                             int max_iter = 500, double initial_step = 0.25);

}  // namespace uq::opt

#endif  // UQ_NELDER_MEAD_HPP
