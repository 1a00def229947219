#include "uq/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "uq/errors.hpp"

namespace uq::opt {

namespace {

// Objective wrapper: non-finite values are treated as +inf so the simplex
// backs away from invalid regions instead of aborting.
double safe_eval(const std::function<double(const Eigen::VectorXd&)>& f,
                 const Eigen::VectorXd& x, int& failures) {
  double v;
  try {
    v = f(x);
  } catch (...) {
    ++failures;
    return std::numeric_limits<double>::infinity();
  }
  if (!std::isfinite(v)) {
    ++failures;
    return std::numeric_limits<double>::infinity();
  }
  return v;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, double rel_tol, int max_iter,
                             double initial_step) {
  const int dim = static_cast<int>(start.size());
  if (dim < 1) throw ParameterError("nelder_mead needs at least one dimension");

  int failures = 0;
  int evaluations = 0;
  const auto eval = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    return safe_eval(objective, x, failures);
  };

  std::vector<Eigen::VectorXd> vertex(static_cast<std::size_t>(dim) + 1, start);
  std::vector<double> value(static_cast<std::size_t>(dim) + 1);
  for (int i = 0; i < dim; ++i) {
    double step = initial_step * std::max(1.0, std::abs(start(i)));
    vertex[static_cast<std::size_t>(i) + 1](i) += step;
  }
  for (std::size_t i = 0; i < vertex.size(); ++i) value[i] = eval(vertex[i]);

  NelderMeadResult result;
  std::vector<std::size_t> order(vertex.size());
  for (int it = 0; it < max_iter; ++it) {
    result.iterations = it + 1;
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t best = order.front(), worst = order.back(),
                      second_worst = order[order.size() - 2];

    if (!std::isfinite(value[best])) {
      if (failures == evaluations)
        throw ComputationError("nelder_mead: objective failed at every vertex");
      break;
    }

    double diameter = 0.0;
    for (std::size_t i = 0; i < vertex.size(); ++i)
      diameter = std::max(diameter, (vertex[i] - vertex[best]).norm());
    if (diameter <= rel_tol * (1.0 + vertex[best].norm())) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < vertex.size(); ++i)
      if (i != worst) centroid += vertex[i];
    centroid /= static_cast<double>(dim);

    const Eigen::VectorXd reflected = centroid + (centroid - vertex[worst]);
    const double f_reflected = eval(reflected);
    if (f_reflected < value[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - vertex[worst]);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        value[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        value[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < value[second_worst]) {
      vertex[worst] = reflected;
      value[worst] = f_reflected;
      continue;
    }
    const Eigen::VectorXd contracted = centroid + 0.5 * (vertex[worst] - centroid);
    const double f_contracted = eval(contracted);
    if (f_contracted < value[worst]) {
      vertex[worst] = contracted;
      value[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i < vertex.size(); ++i) {
      if (i == best) continue;
      vertex[i] = vertex[best] + 0.5 * (vertex[i] - vertex[best]);
      value[i] = eval(vertex[i]);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < vertex.size(); ++i)
    if (value[i] < value[best]) best = i;
  result.x = vertex[best];
  result.fx = value[best];
  if (!std::isfinite(result.fx))
    throw ComputationError("nelder_mead: no finite objective value found");
  return result;
}

}  // namespace uq::opt
