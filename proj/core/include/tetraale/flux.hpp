#pragma once

#include <vector>

#include "tetraale/basis.hpp"
#include "tetraale/physics.hpp"
#include "tetraale/quadrature.hpp"
#include "tetraale/types.hpp"

namespace tetraale {

/// Unit space-time normal and surface measure of the lateral space-time face
/// spanned by the face nodes X0 (at t^n) and X1 (at t^{n+1}) at parameter
/// point (chi1, chi2, tau). The normal points outward when (X0[0..2]) is the
/// owner's outward-oriented vertex order. Returns false for a degenerate
/// (zero-measure) point.
bool st_face_normal(const Vec3 X0[3], const Vec3 X1[3], double dt, double chi1,
                    double chi2, double tau, Vec4& n_unit, double& measure);

/// Path-conservative jump term D.n = 1/2 (int B(Psi).n ds)(qp - qm) along the
/// straight-line segment path, 3-point Gauss-Legendre in s. Inadmissible path
/// states are replaced by the nearest admissible endpoint.
void path_jump(const SystemDescriptor& sys, const StateVec& qm,
               const StateVec& qp, const Vec4& n_unit, StateVec& D);

enum class FluxKind { Rusanov, Osher };

/// Pointwise ALE numerical flux G on a space-time face with unit normal
/// n_unit: average space-time flux plus the path-conservative jump and the
/// scheme's dissipation.
class FaceFlux {
 public:
  FaceFlux(const SystemDescriptor& sys, FluxKind kind)
      : sys_(sys), kind_(kind) {}

  /// `D_out`, when given, receives the path-conservative jump term alone
  /// (needed to form the neighbor-side contribution of a shared face).
  void operator()(const StateVec& qm, const StateVec& qp, const Vec4& n_unit,
                  StateVec& G, StateVec* D_out = nullptr) const;

  FluxKind kind() const { return kind_; }

 private:
  const SystemDescriptor& sys_;
  FluxKind kind_;
};

/// Reference-element quadrature tables for the lateral space-time faces:
/// triangle rule x Gauss-Legendre in tau, with the space-time basis traced on
/// each local face for the owner orientation and all six neighbor-vertex
/// permutations.
struct FaceTables {
  int L = 0;
  int npts = 0;
  std::vector<double> chi1, chi2, tau, weight;
  Eigen::MatrixXd theta[4];           // owner tables, npts x L
  Eigen::MatrixXd theta_perm[4][6];   // neighbor tables per permutation
};

extern const int kPerm3[6][3];

FaceTables build_face_tables(const STBasis& st, int tri_exactness,
                             int tau_points);

/// Permutation id p such that slot i of the owner triple matches
/// nbr_triple[kPerm3[p][i]]; -1 when the triples differ as sets.
int face_permutation_id(const int owner_triple[3], const int nbr_triple[3]);

}  // namespace tetraale
