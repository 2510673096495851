#pragma once

#include <functional>
#include <vector>

#include "tetraale/mesh.hpp"
#include "tetraale/physics.hpp"
#include "tetraale/predictor.hpp"

namespace tetraale {

enum class NodeSolverKind { ChengShu, Maire, MaireNonlinear };

/// One element's contribution to the force balance at a node: the one-third
/// area vectors of the three corner faces, the cell pressure, impedance data
/// and the candidate velocity.
struct CornerContribution {
  Vec3 area[3];  // outward one-third area vectors
  double p = 0.0;
  double rho = 0.0;
  double c = 0.0;
  double gamma_imp = 0.0;  // (gamma+1)/2 for the nonlinear impedance
  double mass = 0.0;       // rho |T| (mass weighting)
  Vec3 vel = Vec3::Zero();
};

/// Velocity constraint V . n = vn (slip / moving wall plane).
struct PlaneConstraint {
  Vec3 n;
  double vn = 0.0;
};

/// Mass-weighted average of the candidate velocities.
Vec3 ns_cs(const std::vector<CornerContribution>& contribs);

/// Corner-force balance solve M_k V = sum(S p n + M_kj V_kj); optional
/// Dukowicz nonlinear impedance via fixed-point iteration (falls back to the
/// linear impedance when it does not converge). `spd_min` receives the
/// smallest eigenvalue of M_k.
Vec3 ns_m(const std::vector<CornerContribution>& contribs,
          const std::vector<PlaneConstraint>& constraints, bool nonlinear,
          double* spd_min = nullptr);

double frobenius_condition(const Mat3& J);

/// One Newton step on the goal function sum_j cond(J_j); `opposite[j]` holds
/// the other three vertices of incident tet j ordered so the node closes a
/// positively oriented tet. Keeps xlag when the step fails to improve.
Vec3 rezone_interior_step(const Vec3& xlag,
                          const std::vector<std::array<Vec3, 3>>& opposite,
                          double edge_scale);

/// Deformation-based relaxation weight: worst incident relative-deformation
/// condition number over the step, mapped to [0,1]; rigid motion gives 0.
double deformation_weight(double kappa_max_rel);

struct MotionOptions {
  NodeSolverKind solver = NodeSolverKind::Maire;
  bool rezoning = false;
  MeshVelocityMode mode = MeshVelocityMode::Lagrangian;
  PrescribedVelocity prescribed;
  /// Wall velocity for MovingWall faces, by tag.
  std::function<Vec3(int tag, const Vec3& x, double t)> wall_velocity;
  /// Prescribed end-of-step position for Dirichlet-driven nodes.
  std::function<Vec3(const Vec3& xn, double t0, double dt)> dirichlet_position;
};

struct MotionStats {
  int spd_failures = 0;
  int rezoned_nodes = 0;
  double min_volume = 0.0;
};

/// Global mesh motion for one step: node solve, Lagrangian update, rezoning
/// and relaxation. Returns false when the moved mesh has a non-positive
/// volume (the step must be retried with a smaller dt).
class MeshMotion {
 public:
  MeshMotion(const TetMesh& mesh, const SystemDescriptor& sys,
             const STMatrices& mats);

  bool move(const TetMesh& mesh, const StateField& states,
            const PredictorField& pred, double t0, double dt,
            const MotionOptions& opt, std::vector<Vec3>& xnew,
            MotionStats* stats = nullptr) const;

 private:
  struct NodeInfo {
    std::vector<int> bfaces;  // incident boundary faces
    bool dirichlet = false;
  };

  const SystemDescriptor& sys_;
  const STMatrices& mats_;
  std::vector<NodeInfo> node_info_;
  std::vector<int> owners_;  // solve list: free nodes and group representatives
};

}  // namespace tetraale
