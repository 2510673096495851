#pragma once

#include <vector>

#include "tetraale/types.hpp"

namespace tetraale {

/// Quadrature rule on a reference domain: unit interval [0,1], unit triangle
/// {x,y >= 0, x+y <= 1}, or unit tetrahedron {x,y,z >= 0, x+y+z <= 1}.
/// All rules have positive weights and integrate polynomials up to
/// `exactness` total degree exactly.
struct Quadrature {
  int dim = 0;
  int exactness = 0;
  std::vector<Vec3> points;  // unused trailing coordinates are zero
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }
};

/// Gauss-Legendre nodes and weights on [0,1]; exact for degree 2n-1.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Gauss-Jacobi rule on [0,1] with weight (1-x)^alpha; exact for degree 2n-1
/// against that weight.
void gauss_jacobi(int n, double alpha, std::vector<double>& nodes,
                  std::vector<double>& weights);

Quadrature interval_quadrature(int degree);
Quadrature triangle_quadrature(int degree);
Quadrature tet_quadrature(int degree);

/// Exact monomial moment over the unit tetrahedron: a! b! c! / (a+b+c+3)!.
double tet_monomial_moment(int a, int b, int c);

}  // namespace tetraale
