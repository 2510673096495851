#pragma once

#include <functional>
#include <vector>

#include "tetraale/basis.hpp"
#include "tetraale/mesh.hpp"
#include "tetraale/physics.hpp"
#include "tetraale/recon.hpp"

namespace tetraale {

enum class MeshVelocityMode { Lagrangian, Eulerian, Prescribed };
using PrescribedVelocity = std::function<Vec3(const Vec3&, double)>;

/// Reference-element matrices of the space-time weak formulation and the
/// evaluation tables reused by every element.
struct STMatrices {
  int degree = 0;
  int L = 0;      // space-time dofs
  int msize = 0;  // spatial basis size

  Eigen::MatrixXd K1;    // [theta(1) theta(1)] - <d_tau theta, theta>
  Eigen::MatrixXd F0;    // [theta(0) psi]
  Eigen::MatrixXd Mass;  // <theta, theta>

  Eigen::MatrixXd K1inv_F0;  // L x msize
  Eigen::MatrixXd K1inv_M;   // L x L
  Eigen::MatrixXd K1inv_E;   // L x 4, geometry right side per vertex weight

  Eigen::MatrixXd dtheta[4];     // node-gradient tables: (l, m) = d theta_m (node l)
  Eigen::MatrixXd vertex_trace;  // 4 x L: time-integrated theta at each vertex
  std::vector<double> tau;       // tau of each node
};

STMatrices assemble_st_matrices(const SpatialBasis& basis, const STBasis& st);

/// Per-element space-time degrees of freedom of the local predictor.
struct PredictorField {
  int L = 0;
  int nvar = 0;
  bool with_source = false;
  bool with_ncp = false;
  std::vector<double> qdof;  // [(e*L + l)*nvar + v]
  std::vector<double> vdof;  // [(e*L + l)*3 + d]
  std::vector<double> xdof;  // [(e*L + l)*3 + d]
  std::vector<double> sdof;  // source dofs (if with_source)
  std::vector<double> pdof;  // non-conservative product dofs (if with_ncp)
  std::vector<int> iterations;     // diagnostics
  std::vector<double> residuals;

  void resize(int num_elems);
  double* q(int e) { return qdof.data() + size_t(e) * L * nvar; }
  const double* q(int e) const { return qdof.data() + size_t(e) * L * nvar; }
  double* v(int e) { return vdof.data() + size_t(e) * L * 3; }
  const double* v(int e) const { return vdof.data() + size_t(e) * L * 3; }
  double* x(int e) { return xdof.data() + size_t(e) * L * 3; }
  const double* x(int e) const { return xdof.data() + size_t(e) * L * 3; }
};

struct PredictorOptions {
  MeshVelocityMode mode = MeshVelocityMode::Lagrangian;
  PrescribedVelocity prescribed;
  double tol = 1e-12;
  int max_iter = 0;  // 0: use 2(M+1)+10
};

/// Element-local space-time solve: evolves the reconstruction polynomial and
/// the element geometry over one step without neighbor data.
class Predictor {
 public:
  Predictor(const SpatialBasis& basis, const STBasis& st,
            const SystemDescriptor& sys);

  /// Solves all elements; returns the number of failed elements
  /// (non-convergence, inverted space-time Jacobian, inadmissible state).
  int solve_all(const TetMesh& mesh, const ReconField& recon, double t0,
                double dt, const PredictorOptions& opt, PredictorField& out) const;

  bool solve_element(const TetMesh& mesh, int e, const ReconField& recon,
                     double t0, double dt, const PredictorOptions& opt,
                     PredictorField& out) const;

  const STMatrices& matrices() const { return mats_; }
  const STBasis& st_basis() const { return st_; }

 private:
  const SpatialBasis& basis_;
  const STBasis& st_;
  const SystemDescriptor& sys_;
  STMatrices mats_;
  Eigen::MatrixXd psi_at_nodes_;  // L x msize, reconstruction trace at nodes
};

/// Inverse space-time Jacobian entries at one point: spatial block of
/// d(xi)/dx, the time column d(xi)/dt, and det(J_spatial). Returns false on a
/// non-positive determinant.
bool metric_terms(const Mat3& Jx, const Vec3& xtau, double dt, Mat3& dxi_dx,
                  Vec3& dxi_dt, double& detJx);

}  // namespace tetraale
