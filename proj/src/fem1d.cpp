#include "uq/fem1d.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uq/errors.hpp"

namespace uq::fem1d {

Mesh Mesh::uniform(int m, double lo, double hi) {
  if (m < 1) throw ParameterError("mesh needs m >= 1 elements, got " + std::to_string(m));
  if (!(hi > lo)) throw ParameterError("mesh needs hi > lo");
  Mesh mesh;
  mesh.m = m;
  mesh.lo = lo;
  mesh.hi = hi;
  mesh.h = (hi - lo) / m;
  mesh.nodes.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) mesh.nodes[static_cast<std::size_t>(i)] = lo + i * mesh.h;
  mesh.nodes.back() = hi;
  return mesh;
}

void Mesh::validate() const {
  if (m < 1) throw ParameterError("mesh needs m >= 1 elements");
  if (static_cast<int>(nodes.size()) != m + 1) throw DimensionError("mesh nodes/m mismatch");
  if (!(h > 0.0)) throw ParameterError("mesh width must be positive");
  for (int i = 1; i <= m; ++i) {
    const double step = nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(i - 1)];
    if (!(step > 0.0)) throw ParameterError("mesh nodes must be strictly increasing");
    if (std::abs(step - h) > 1e-12 * std::abs(h))
      throw ParameterError("mesh nodes must be uniformly spaced");
  }
}

std::vector<double> project_conductivity(const grf::FieldSample& field, const Mesh& mesh) {
  const auto n = static_cast<int>(field.values.size());
  const int m = mesh.m;
  if (n < 1) throw DimensionError("empty conductivity field");
  if (m % n != 0 && n % m != 0)
    throw DimensionError("mesh element count " + std::to_string(m) +
                         " and conductivity grid size " + std::to_string(n) +
                         " must divide one another");
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int e = 0; e < m; ++e) {
    // Cell containing the element midpoint: floor((e + 1/2) * n / m),
    // computed in exact integer arithmetic.
    const long long cell = (2LL * e + 1) * n / (2LL * m);
    const double value = field.values(static_cast<Eigen::Index>(cell));
    if (!(value > 0.0))
      throw ParameterError("nonpositive conductivity in cell " + std::to_string(cell));
    out[static_cast<std::size_t>(e)] = value;
  }
  return out;
}

FemSolution solve(std::span<const double> elem_conductivity, const Mesh& mesh, double flux_bc,
                  std::uint64_t conductivity_seed) {
  mesh.validate();
  const int m = mesh.m;
  if (static_cast<int>(elem_conductivity.size()) != m)
    throw DimensionError("expected " + std::to_string(m) + " element conductivities, got " +
                         std::to_string(elem_conductivity.size()));
  for (double a : elem_conductivity)
    if (!(a > 0.0)) throw ParameterError("element conductivities must be positive");

  // Unknowns u_1..u_m after eliminating the Dirichlet node. Row i couples
  // elements i and i+1; stiffness contribution a_e / h per element.
  const double h = mesh.h;
  std::vector<double> diag(static_cast<std::size_t>(m));
  std::vector<double> off(static_cast<std::size_t>(m) - 1);  // symmetric off-diagonal
  std::vector<double> load(static_cast<std::size_t>(m), h);
  for (int i = 0; i < m - 1; ++i) {
    const double a_left = elem_conductivity[static_cast<std::size_t>(i)];
    const double a_right = elem_conductivity[static_cast<std::size_t>(i) + 1];
    diag[static_cast<std::size_t>(i)] = (a_left + a_right) / h;
    off[static_cast<std::size_t>(i)] = -a_right / h;
  }
  diag[static_cast<std::size_t>(m) - 1] = elem_conductivity[static_cast<std::size_t>(m) - 1] / h;
  load[static_cast<std::size_t>(m) - 1] = h / 2.0 + flux_bc;

  // Thomas algorithm.
  std::vector<double> c_prime(static_cast<std::size_t>(m), 0.0);
  std::vector<double> d_prime(static_cast<std::size_t>(m), 0.0);
  double pivot = diag[0];
  if (pivot == 0.0) throw SingularError("zero pivot in tridiagonal solve at row 0");
  if (m > 1) c_prime[0] = off[0] / pivot;
  d_prime[0] = load[0] / pivot;
  for (int i = 1; i < m; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const double lower = off[si - 1];
    pivot = diag[si] - lower * c_prime[si - 1];
    if (pivot == 0.0) throw SingularError("zero pivot in tridiagonal solve at row " + std::to_string(i));
    if (i < m - 1) c_prime[si] = off[si] / pivot;
    d_prime[si] = (load[si] - lower * d_prime[si - 1]) / pivot;
  }

  FemSolution solution;
  solution.mesh = mesh;
  solution.conductivity_seed = conductivity_seed;
  solution.nodal_values.assign(static_cast<std::size_t>(m) + 1, 0.0);
  solution.nodal_values[static_cast<std::size_t>(m)] = d_prime[static_cast<std::size_t>(m) - 1];
  for (int i = m - 2; i >= 0; --i) {
    const auto si = static_cast<std::size_t>(i);
    solution.nodal_values[si + 1] = d_prime[si] - c_prime[si] * solution.nodal_values[si + 2];
  }
  for (double v : solution.nodal_values)
    if (!std::isfinite(v)) throw ComputationError("non-finite nodal value in FEM solution");
  return solution;
}

double evaluate_at(const FemSolution& solution, double x) {
  const Mesh& mesh = solution.mesh;
  if (x < mesh.lo || x > mesh.hi)
    throw ParameterError("evaluation point " + std::to_string(x) + " outside [" +
                         std::to_string(mesh.lo) + ", " + std::to_string(mesh.hi) + "]");
  const int k = std::clamp(static_cast<int>((x - mesh.lo) / mesh.h), 0, mesh.m - 1);
  const auto sk = static_cast<std::size_t>(k);
  // Exact at nodes, independent of floating-point bracketing noise.
  if (x == mesh.nodes[sk]) return solution.nodal_values[sk];
  if (x == mesh.nodes[sk + 1]) return solution.nodal_values[sk + 1];
  const double t = std::clamp((x - mesh.nodes[sk]) / mesh.h, 0.0, 1.0);
  return (1.0 - t) * solution.nodal_values[sk] + t * solution.nodal_values[sk + 1];
}

}  // namespace uq::fem1d
