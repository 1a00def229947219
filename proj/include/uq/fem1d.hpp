#ifndef UQ_FEM1D_HPP
#define UQ_FEM1D_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "uq/grf.hpp"

namespace uq::fem1d {

// Uniform mesh of m linear elements on [lo, hi], m+1 nodes.
struct Mesh {
  int m = 0;
  double lo = 0.0;
  double hi = 1.0;
  double h = 0.0;
  std::vector<double> nodes;

  static Mesh uniform(int m, double lo = 0.0, double hi = 1.0);
  void validate() const;
};

// Nodal solution of the two-point boundary value problem
//   -(a u')' = 1 on [lo, hi],  u(lo) = 0,  a u'(hi) = flux_bc.
struct FemSolution {
  std::vector<double> nodal_values;  // nodal_values[0] == 0 exactly
  Mesh mesh;
  std::uint64_t conductivity_seed = 0;
};

// Piecewise-constant restriction of the conductivity sample to the mesh:
// each element takes the value of the grid cell containing its midpoint.
// Requires the element count and field length to divide one another.
std::vector<double> project_conductivity(const grf::FieldSample& field, const Mesh& mesh);

// Linear-element stiffness assembly with exact integration of the unit
// source, flux boundary value added to the last load entry, Dirichlet row
// eliminated, tridiagonal (Thomas) solve.
FemSolution solve(std::span<const double> elem_conductivity, const Mesh& mesh, double flux_bc,
                  std::uint64_t conductivity_seed = 0);

// Linear interpolation between bracketing nodes; exact at nodes.
double evaluate_at(const FemSolution& solution, double x);

}  // namespace uq::fem1d

#endif  // UQ_FEM1D_HPP
