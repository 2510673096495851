#pragma once

#include <vector>

#include "tetraale/basis.hpp"
#include "tetraale/mesh.hpp"
#include "tetraale/physics.hpp"
#include "tetraale/stencil.hpp"

namespace tetraale {

/// Per-element WENO polynomial coefficients in the orthogonal spatial basis.
/// The first coefficient row equals the cell average (the constant mode is 1
/// and every higher mode has zero mean).
struct ReconField {
  int msize = 0;
  int nvar = 0;
  std::vector<double> coef;        // [(elem*msize + l)*nvar + v]
  std::vector<uint8_t> order_drop; // per elem: rank-deficiency fallback to M=0

  double* elem(int e) { return coef.data() + size_t(e) * msize * nvar; }
  const double* elem(int e) const {
    return coef.data() + size_t(e) * msize * nvar;
  }
  /// msize x nvar coefficient matrix of one element (row-major storage).
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
  mat(int e) const {
    return {elem(e), msize, nvar};
  }
};

struct FlattenerField {
  std::vector<double> elem_f;  // in [0,1]
  std::vector<double> node_f;
};

/// WENO weights for nine oscillation indicators (componentwise): central
/// linear weight 1e5, one-sided 1, r = 8, eps = 1e-14, normalized to sum 1.
void weno_weights(const double sigma[9], double omega[9]);

class Reconstructor {
 public:
  Reconstructor(const TetMesh& mesh, const StencilSet& stencils,
                const SpatialBasis& basis, int nvar);

  /// Solve the nine constrained least-squares systems per element on the
  /// current geometry and combine them with the nonlinear weights.
  void reconstruct(const TetMesh& mesh, const StateField& states,
                   ReconField& out) const;

  /// Mean of every basis function over `tet` mapped to the reference frame of
  /// `frame` (quadrature of exactness M; the own-element row is (1,0,...)).
  void basis_means(const TetMesh& mesh, const RefMapping& frame, int tet,
                   double* row) const;

  const SpatialBasis& basis() const { return basis_; }

 private:
  const StencilSet& stencils_;
  const SpatialBasis& basis_;
  int nvar_;
  Quadrature quad_;  // exactness M on the unit tet
};

/// Shock detector from cell averages: compression relative to the local sound
/// speed, spread over vertex neighborhoods (k1 = 0.1).
void compute_flattener(const TetMesh& mesh, const SystemDescriptor& sys,
                       const StateField& states, FlattenerField& out);

/// Blend each polynomial toward its cell average by the element flattener; if
/// the blended polynomial is still inadmissible at any predictor
/// initialization point, drop to the piecewise-constant average (f = 1).
void apply_flattener(const SystemDescriptor& sys, const SpatialBasis& basis,
                     const std::vector<Vec3>& check_points,
                     const FlattenerField& f, ReconField& recon);

}  // namespace tetraale
