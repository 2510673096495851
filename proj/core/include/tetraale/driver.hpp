#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "tetraale/flux.hpp"
#include "tetraale/motion.hpp"
#include "tetraale/mesh.hpp"
#include "tetraale/physics.hpp"
#include "tetraale/predictor.hpp"
#include "tetraale/recon.hpp"
#include "tetraale/stencil.hpp"

namespace tetraale {

struct SolverOptions {
  int degree = 2;
  FluxKind flux = FluxKind::Osher;
  NodeSolverKind node_solver = NodeSolverKind::Maire;
  bool rezoning = false;
  bool flattener = false;
  double cfl = 1.0 / 3.0;
  int max_halvings = 8;
  MeshVelocityMode mode = MeshVelocityMode::Lagrangian;
  PrescribedVelocity prescribed;
  std::function<Vec3(int tag, const Vec3& x, double t)> wall_velocity;
  std::function<Vec3(const Vec3& xn, double t0, double dt)> dirichlet_position;
  std::function<StateVec(const Vec3& x, double t)> dirichlet_state;
};

struct StepDiagnostics {
  double time = 0.0;
  double dt = 0.0;
  double mass = 0.0;
  Vec3 momentum = Vec3::Zero();
  double energy = 0.0;
  double min_quality = 0.0;
  int flattener_active = 0;
  int retries = 0;
  int rezoned = 0;
};

/// One-step ALE finite volume solver: reconstruct, predict, move, update.
class Solver {
 public:
  Solver(TetMesh mesh, std::shared_ptr<SystemDescriptor> sys,
         const SolverOptions& opt);

  void set_initial_condition(
      const std::function<StateVec(const Vec3&)>& prim_of_x);
  void set_initial_averages(const StateField& averages);

  double compute_dt() const;
  /// One step limited by dt_max; throws RunError after retry exhaustion.
  StepDiagnostics step(double dt_max);
  /// Advance to exactly t_end (dt clamped onto the output time).
  void advance_to(double t_end,
                  const std::function<void(const Solver&)>& per_step = {});

  const TetMesh& mesh() const { return mesh_; }
  const SystemDescriptor& system() const { return *sys_; }
  const StateField& states() const { return states_; }
  const ReconField& recon() const { return recon_; }
  const SpatialBasis& basis() const { return basis_; }
  double time() const { return t_; }
  int step_count() const { return step_count_; }
  const SolverOptions& options() const { return opt_; }
  const std::vector<StepDiagnostics>& history() const { return history_; }
  StepDiagnostics totals() const;

  /// Reconstruct on the current mesh/states (also called inside step()).
  void reconstruct_now();
  /// Reconstructed state at a physical point inside element e.
  StateVec eval_recon(int e, const Vec3& x) const;

  /// Closed space-time surface integral of the outward normal for element e
  /// given moved node positions (diagnostic for the geometric conservation
  /// law; exactly zero up to roundoff).
  Vec4 gcl_residual(int e, const std::vector<Vec3>& xnew, double dt) const;

 private:
  struct FaceRec {
    int owner = -1, oface = -1;
    int nbr = -1, nface = -1, perm = -1;
    int bfi = -1;           // boundary-face index when not interior
    bool periodic = false;
  };

  void build_faces();
  void exterior_state(const FaceRec& fr, const StateVec& qm, const Vec4& n_unit,
                      const Vec3& x, double t, StateVec& qp) const;
  bool try_update(double dt, StateField& out, std::vector<Vec3>& xnew,
                  StepDiagnostics& diag);
  void collect_diagnostics(StepDiagnostics& d) const;

  TetMesh mesh_;
  std::shared_ptr<SystemDescriptor> sys_;
  SolverOptions opt_;
  SpatialBasis basis_;
  STBasis stbasis_;
  StencilSet stencils_;
  std::unique_ptr<Reconstructor> reconstructor_;
  std::unique_ptr<Predictor> predictor_;
  std::unique_ptr<MeshMotion> motion_;
  FaceTables ftab_;
  Quadrature volq_;               // tet rule for volume integrals
  std::vector<double> voltau_, voltauw_;
  Eigen::MatrixXd vol_theta_;     // (tetq x gl) x L
  Eigen::MatrixXd vol_dtheta_[4];

  std::vector<FaceRec> faces_;
  std::vector<std::array<int, 4>> elem_faces_;  // face record per local face
  std::vector<std::array<int8_t, 4>> elem_face_side_;  // +1 owner, -1 neighbor

  StateField states_;
  ReconField recon_;
  FlattenerField flattener_;
  PredictorField pred_;
  double t_ = 0.0;
  int step_count_ = 0;
  std::vector<StepDiagnostics> history_;
};

}  // namespace tetraale
