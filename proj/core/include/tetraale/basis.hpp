#pragma once

#include <array>
#include <vector>

#include "tetraale/quadrature.hpp"
#include "tetraale/types.hpp"

namespace tetraale {

/// Orthogonal modal basis on the unit tetrahedron, ordered by total degree
/// with the constant mode first. psi_1 = 1 exactly, all higher modes have
/// zero mean, and the Gram matrix is (1/6) I.
class SpatialBasis {
 public:
  explicit SpatialBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return size_; }

  /// Evaluate all basis functions at a reference point.
  void eval(const Vec3& xi, double* values) const;

  /// Evaluate values and reference-space gradients (row-major size x 3).
  void eval_grad(const Vec3& xi, double* values, double* grad) const;

  /// Oscillation indicator matrix: sum over all derivative multi-indices of
  /// total order 1..M of the derivative products integrated over the unit tet.
  const Eigen::MatrixXd& oscillation_matrix() const { return osc_; }

 private:
  void monomial_values(const Vec3& xi, double* mono) const;

  int degree_;
  int size_;
  std::vector<std::array<int, 3>> expo_;
  Eigen::MatrixXd coef_;  // basis x monomial coefficients
  Eigen::MatrixXd osc_;
};

/// Nodal space-time basis on the unit tetrahedron x [0,1]: Lagrange
/// polynomials through the tensor product of the equidistant P_M lattice in
/// space and Gauss-Legendre points in time. theta_l(node_m) = delta_lm.
class STBasis {
 public:
  explicit STBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return size_; }                // L = spatial_size*(M+1)
  int spatial_size() const { return spatial_size_; }

  const std::vector<Vec4>& nodes() const { return nodes_; }
  double tau_node(int l) const { return nodes_[l][3]; }
  /// Spatial lattice points shared by every time level.
  const std::vector<Vec3>& spatial_nodes() const { return spatial_nodes_; }

  void eval(const Vec4& xt, double* values) const;
  /// Values plus 4-gradients (d/dxi, d/deta, d/dzeta, d/dtau), row-major Lx4.
  void eval_grad(const Vec4& xt, double* values, double* grad) const;

 private:
  int degree_;
  int spatial_size_;
  int size_;
  std::vector<Vec4> nodes_;
  std::vector<Vec3> spatial_nodes_;
  std::vector<std::array<int, 4>> expo_;  // spatial exponents + tau power
  Eigen::MatrixXd coef_;                  // basis x monomial coefficients
};

}  // namespace tetraale
