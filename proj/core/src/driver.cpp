#include "tetraale/driver.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tetraale {

Solver::Solver(TetMesh mesh, std::shared_ptr<SystemDescriptor> sys,
               const SolverOptions& opt)
    : mesh_(std::move(mesh)),
      sys_(std::move(sys)),
      opt_(opt),
      basis_(opt.degree),
      stbasis_(opt.degree),
      stencils_(build_stencils(mesh_, opt.degree)),
      volq_(tet_quadrature(2 * opt.degree + 1)) {
  reconstructor_ = std::make_unique<Reconstructor>(mesh_, stencils_, basis_,
                                                   sys_->nvar());
  predictor_ = std::make_unique<Predictor>(basis_, stbasis_, *sys_);
  motion_ = std::make_unique<MeshMotion>(mesh_, *sys_, predictor_->matrices());
  ftab_ = build_face_tables(stbasis_, std::max(2 * opt.degree + 1, 2),
                            std::max(opt.degree + 1, 2));
  gauss_legendre(opt.degree + 2, voltau_, voltauw_);

  const int L = stbasis_.size();
  const int nq = volq_.size() * static_cast<int>(voltau_.size());
  vol_theta_.resize(nq, L);
  for (int d = 0; d < 4; ++d) vol_dtheta_[d].resize(nq, L);
  std::vector<double> th(L), dth(4 * L);
  int row = 0;
  for (size_t it = 0; it < voltau_.size(); ++it) {
    for (int p = 0; p < volq_.size(); ++p, ++row) {
      Vec4 xt(volq_.points[p][0], volq_.points[p][1], volq_.points[p][2],
              voltau_[it]);
      stbasis_.eval_grad(xt, th.data(), dth.data());
      for (int l = 0; l < L; ++l) {
        vol_theta_(row, l) = th[l];
        for (int d = 0; d < 4; ++d) vol_dtheta_[d](row, l) = dth[4 * l + d];
      }
    }
  }

  build_faces();
  states_ = StateField(mesh_.num_tets(), sys_->nvar());
}

void Solver::build_faces() {
  const int NE = mesh_.num_tets();
  elem_faces_.assign(NE, {-1, -1, -1, -1});
  elem_face_side_.assign(NE, {0, 0, 0, 0});
  faces_.clear();

  for (int e = 0; e < NE; ++e) {
    for (int f = 0; f < 4; ++f) {
      int nb = mesh_.face_neighbors[e][f];
      if (nb >= 0) {
        if (nb < e) continue;  // owned by the smaller index
        FaceRec fr;
        fr.owner = e;
        fr.oface = f;
        fr.nbr = nb;
        fr.nface = mesh_.neighbor_face[e][f];
        auto ot = mesh_.face_nodes(e, f);
        auto nt = mesh_.face_nodes(nb, fr.nface);
        fr.perm = face_permutation_id(ot.data(), nt.data());
        if (fr.perm < 0) throw MeshError("inconsistent face adjacency");
        int idx = static_cast<int>(faces_.size());
        faces_.push_back(fr);
        elem_faces_[e][f] = idx;
        elem_face_side_[e][f] = 1;
        elem_faces_[nb][fr.nface] = idx;
        elem_face_side_[nb][fr.nface] = -1;
        continue;
      }
      int bfi = mesh_.boundary_id[e][f];
      const auto& bf = mesh_.boundary_faces[bfi];
      if (bf.kind == BoundaryKind::None)
        throw MeshError("untagged boundary face");
      if (bf.kind == BoundaryKind::Periodic) {
        const auto& pf = mesh_.boundary_faces[bf.pair];
        if (std::make_pair(pf.tet, pf.face) < std::make_pair(e, f)) continue;
        FaceRec fr;
        fr.owner = e;
        fr.oface = f;
        fr.nbr = pf.tet;
        fr.nface = pf.face;
        fr.periodic = true;
        fr.bfi = bfi;
        // Vertex correspondence through the periodic translation.
        auto ot = mesh_.face_nodes(e, f);
        auto nt = mesh_.face_nodes(pf.tet, pf.face);
        int match[3];
        for (int i = 0; i < 3; ++i) {
          match[i] = -1;
          Vec3 target = mesh_.nodes[ot[i]] + bf.shift;
          for (int j = 0; j < 3; ++j)
            if ((mesh_.nodes[nt[j]] - target).norm() < 1e-9) match[i] = j;
          if (match[i] < 0) throw MeshError("periodic face vertex mismatch");
        }
        for (int p = 0; p < 6; ++p) {
          bool ok = true;
          for (int i = 0; i < 3; ++i)
            if (kPerm3[p][i] != match[i]) ok = false;
          if (ok) fr.perm = p;
        }
        if (fr.perm < 0) throw MeshError("periodic face permutation not found");
        int idx = static_cast<int>(faces_.size());
        faces_.push_back(fr);
        elem_faces_[e][f] = idx;
        elem_face_side_[e][f] = 1;
        elem_faces_[pf.tet][pf.face] = idx;
        elem_face_side_[pf.tet][pf.face] = -1;
      } else {
        FaceRec fr;
        fr.owner = e;
        fr.oface = f;
        fr.bfi = bfi;
        int idx = static_cast<int>(faces_.size());
        faces_.push_back(fr);
        elem_faces_[e][f] = idx;
        elem_face_side_[e][f] = 1;
      }
    }
  }
}

void Solver::set_initial_condition(
    const std::function<StateVec(const Vec3&)>& prim_of_x) {
  Quadrature q = tet_quadrature(std::max(2 * opt_.degree + 2, 4));
  const int NE = mesh_.num_tets();
  const int nv = sys_->nvar();
#pragma omp parallel for schedule(static)
  for (int e = 0; e < NE; ++e) {
    RefMapping m = mesh_.mapping(e);
    StateVec acc = StateVec::Zero(nv);
    for (int p = 0; p < q.size(); ++p) {
      Vec3 x = m.to_phys(q.points[p]);
      acc += q.weights[p] * sys_->prim_to_cons(prim_of_x(x));
    }
    states_.set(e, StateVec(6.0 * acc));  // weights sum to 1/6
  }
}

void Solver::set_initial_averages(const StateField& averages) {
  states_ = averages;
}

double Solver::compute_dt() const {
  const int NE = mesh_.num_tets();
  double dt = std::numeric_limits<double>::max();
#pragma omp parallel for schedule(static) reduction(min : dt)
  for (int e = 0; e < NE; ++e) {
    const auto& t = mesh_.tets[e];
    double d = insphere_diameter(mesh_.nodes[t[0]], mesh_.nodes[t[1]],
                                 mesh_.nodes[t[2]], mesh_.nodes[t[3]]);
    StateVec q = states_.get(e);
    Vec3 V;
    switch (opt_.mode) {
      case MeshVelocityMode::Lagrangian: V = sys_->velocity(q); break;
      case MeshVelocityMode::Eulerian: V = Vec3::Zero(); break;
      case MeshVelocityMode::Prescribed:
        V = opt_.prescribed(mesh_.barycenter(e), t_);
        break;
    }
    double lam = sys_->max_signal(q, V);
    // Moving-boundary geometric constraint: a driven wall must not cross a
    // cell within one step.
    double wall = 0.0;
    for (int f = 0; f < 4; ++f) {
      if (mesh_.face_neighbors[e][f] >= 0) continue;
      const auto& bf = mesh_.boundary_faces[mesh_.boundary_id[e][f]];
      if (bf.kind == BoundaryKind::MovingWall && opt_.wall_velocity) {
        auto fn = mesh_.face_nodes(e, f);
        Vec3 c = (mesh_.nodes[fn[0]] + mesh_.nodes[fn[1]] + mesh_.nodes[fn[2]]) / 3.0;
        wall = std::max(wall, opt_.wall_velocity(bf.tag, c, t_).norm());
      } else if (bf.kind == BoundaryKind::Dirichlet && opt_.dirichlet_position) {
        auto fn = mesh_.face_nodes(e, f);
        const double probe = 1e-6;
        for (int i = 0; i < 3; ++i) {
          Vec3 xp = opt_.dirichlet_position(mesh_.nodes[fn[i]], t_, probe);
          wall = std::max(wall, (xp - mesh_.nodes[fn[i]]).norm() / probe);
        }
      }
    }
    double lim = opt_.cfl * d / std::max(lam, 1e-300);
    if (wall > 0.0) lim = std::min(lim, d / wall);
    dt = std::min(dt, lim);
  }
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw RunError("non-positive time step");
  return dt;
}

void Solver::reconstruct_now() {
  reconstructor_->reconstruct(mesh_, states_, recon_);
  if (opt_.flattener) {
    compute_flattener(mesh_, *sys_, states_, flattener_);
    apply_flattener(*sys_, basis_, stbasis_.spatial_nodes(), flattener_, recon_);
  }
}

StateVec Solver::eval_recon(int e, const Vec3& x) const {
  RefMapping m = mesh_.mapping(e);
  Vec3 xi = m.to_ref(x);
  std::vector<double> psi(basis_.size());
  basis_.eval(xi, psi.data());
  const int nv = sys_->nvar();
  StateVec q = StateVec::Zero(nv);
  const double* c = recon_.elem(e);
  for (int l = 0; l < basis_.size(); ++l)
    for (int v = 0; v < nv; ++v) q[v] += psi[l] * c[size_t(l) * nv + v];
  return q;
}

void Solver::exterior_state(const FaceRec& fr, const StateVec& qm,
                            const Vec4& n_unit, const Vec3& x, double t,
                            StateVec& qp) const {
  const auto& bf = mesh_.boundary_faces[fr.bfi];
  double nsn = n_unit.head<3>().norm();
  Vec3 n = n_unit.head<3>() / nsn;
  switch (bf.kind) {
    case BoundaryKind::Transmissive:
      qp = qm;
      break;
    case BoundaryKind::SlipWall:
      qp = sys_->wall_mirror(qm, n, Vec3::Zero());
      break;
    case BoundaryKind::MovingWall: {
      Vec3 vw = opt_.wall_velocity ? opt_.wall_velocity(bf.tag, x, t)
                                   : Vec3::Zero();
      qp = sys_->wall_mirror(qm, n, vw);
      break;
    }
    case BoundaryKind::Dirichlet:
      qp = opt_.dirichlet_state(x, t);
      break;
    default:
      throw RunError("unhandled boundary kind in flux assembly");
  }
}

bool Solver::try_update(double dt, StateField& out, std::vector<Vec3>& xnew,
                        StepDiagnostics& diag) {
  const int NE = mesh_.num_tets();
  const int nv = sys_->nvar();
  const int L = stbasis_.size();

  PredictorOptions popt;
  popt.mode = opt_.mode;
  popt.prescribed = opt_.prescribed;
  int fails = predictor_->solve_all(mesh_, recon_, t_, dt, popt, pred_);
  if (fails > 0) return false;

  MotionOptions mopt;
  mopt.solver = opt_.node_solver;
  mopt.rezoning = opt_.rezoning;
  mopt.mode = opt_.mode;
  mopt.prescribed = opt_.prescribed;
  mopt.wall_velocity = opt_.wall_velocity;
  mopt.dirichlet_position = opt_.dirichlet_position;
  MotionStats mstats;
  if (!motion_->move(mesh_, states_, pred_, t_, dt, mopt, xnew, &mstats))
    return false;
  diag.rezoned = mstats.rezoned_nodes;

  // Space-time face integrals, one pass per face; the neighbor side of a
  // shared face is -I_G + 2 I_D (the jump term is direction-symmetric).
  const int NF = static_cast<int>(faces_.size());
  const bool nc = sys_->has_nonconservative();
  Eigen::MatrixXd IG(nv, NF);
  Eigen::MatrixXd ID;
  if (nc) ID.setZero(nv, NF);
  FaceFlux flux(*sys_, opt_.flux);

  bool face_ok = true;
#pragma omp parallel
  {
    Eigen::MatrixXd QM, QP;
    StateVec qm(nv), qp(nv), G(nv), D(nv), acc(nv), accD(nv);
#pragma omp for schedule(static)
    for (int fi = 0; fi < NF; ++fi) {
      const FaceRec& fr = faces_[fi];
      auto fn = mesh_.face_nodes(fr.owner, fr.oface);
      Vec3 X0[3], X1[3];
      for (int i = 0; i < 3; ++i) {
        X0[i] = mesh_.nodes[fn[i]];
        X1[i] = xnew[fn[i]];
      }
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
          Qo(pred_.q(fr.owner), L, nv);
      QM.noalias() = ftab_.theta[fr.oface] * Qo;
      const bool interior = fr.nbr >= 0;
      if (interior) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            Qn(pred_.q(fr.nbr), L, nv);
        QP.noalias() = ftab_.theta_perm[fr.nface][fr.perm] * Qn;
      }
      acc.setZero();
      accD.setZero();
      for (int q = 0; q < ftab_.npts; ++q) {
        Vec4 nu;
        double meas;
        if (!st_face_normal(X0, X1, dt, ftab_.chi1[q], ftab_.chi2[q],
                            ftab_.tau[q], nu, meas))
          continue;  // collapsed face point contributes nothing
        qm = QM.row(q).transpose();
        if (interior) {
          qp = QP.row(q).transpose();
        } else {
          double b0 = 1.0 - ftab_.chi1[q] - ftab_.chi2[q];
          double tq = ftab_.tau[q];
          Vec3 x = b0 * ((1 - tq) * X0[0] + tq * X1[0]) +
                   ftab_.chi1[q] * ((1 - tq) * X0[1] + tq * X1[1]) +
                   ftab_.chi2[q] * ((1 - tq) * X0[2] + tq * X1[2]);
          exterior_state(fr, qm, nu, x, t_ + tq * dt, qp);
        }
        flux(qm, qp, nu, G, nc ? &D : nullptr);
        if (!G.allFinite()) {
#pragma omp atomic write
          face_ok = false;
          break;
        }
        double w = ftab_.weight[q] * meas;
        acc += w * G;
        if (nc) accD += w * D;
      }
      IG.col(fi) = acc;
      if (nc) ID.col(fi) = accD;
    }
  }
  if (!face_ok) return false;

  // Volume update with the source / non-conservative space-time integral.
  const bool with_vol = sys_->has_source() || nc;
  bool admissible_ok = true;
#pragma omp parallel
  {
    Eigen::MatrixXd XG[3];
    Eigen::MatrixXd SP;
    StateVec qnew(nv);
#pragma omp for schedule(static)
    for (int e = 0; e < NE; ++e) {
      const auto& t = mesh_.tets[e];
      double vol0 = signed_tet_volume(mesh_.nodes[t[0]], mesh_.nodes[t[1]],
                                      mesh_.nodes[t[2]], mesh_.nodes[t[3]]);
      double vol1 = signed_tet_volume(xnew[t[0]], xnew[t[1]], xnew[t[2]],
                                      xnew[t[3]]);
      if (!(vol1 > 0.0)) {
#pragma omp atomic write
        admissible_ok = false;
        continue;
      }
      qnew = vol0 * states_.get(e);
      for (int f = 0; f < 4; ++f) {
        int fi = elem_faces_[e][f];
        if (elem_face_side_[e][f] > 0) {
          qnew -= IG.col(fi);
        } else {
          qnew += IG.col(fi);
          if (nc) qnew -= 2.0 * ID.col(fi);
        }
      }
      if (with_vol) {
        // Integral of (S_h - P_h) over the moving space-time volume using the
        // predictor's isoparametric Jacobian.
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            X(pred_.x(e), L, 3);
        for (int d = 0; d < 3; ++d) XG[d].noalias() = vol_dtheta_[d] * X;
        const double* sd =
            sys_->has_source() ? pred_.sdof.data() + size_t(e) * L * nv : nullptr;
        const double* pdn = nc ? pred_.pdof.data() + size_t(e) * L * nv : nullptr;
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            Sd(sd ? sd : pdn, L, nv);
        SP = Eigen::MatrixXd::Zero(vol_theta_.rows(), nv);
        if (sd)
          SP.noalias() += vol_theta_ * Eigen::Map<const Eigen::Matrix<
                                           double, Eigen::Dynamic,
                                           Eigen::Dynamic, Eigen::RowMajor>>(
                                           sd, L, nv);
        if (pdn)
          SP.noalias() -= vol_theta_ * Eigen::Map<const Eigen::Matrix<
                                           double, Eigen::Dynamic,
                                           Eigen::Dynamic, Eigen::RowMajor>>(
                                           pdn, L, nv);
        int row = 0;
        for (size_t it = 0; it < voltau_.size(); ++it) {
          for (int p = 0; p < volq_.size(); ++p, ++row) {
            Mat3 Jx;
            for (int d = 0; d < 3; ++d)
              Jx.col(d) = XG[d].row(row).transpose();
            double det = Jx.determinant();
            double w = volq_.weights[p] * voltauw_[it] * dt * det;
            qnew += w * SP.row(row).transpose();
          }
        }
      }
      qnew /= vol1;
      if (!sys_->admissible(qnew)) {
#pragma omp atomic write
        admissible_ok = false;
        continue;
      }
      out.set(e, qnew);
    }
  }
  return admissible_ok;
}

StepDiagnostics Solver::step(double dt_max) {
  reconstruct_now();
  double dt = std::min(compute_dt(), dt_max);

  StateField out(mesh_.num_tets(), sys_->nvar());
  std::vector<Vec3> xnew;
  StepDiagnostics diag;

  int retries = 0;
  for (;; ++retries) {
    if (retries > opt_.max_halvings)
      throw RunError("time step retry limit exceeded at t = " +
                     std::to_string(t_) + " (step " +
                     std::to_string(step_count_) + ")");
    if (try_update(dt, out, xnew, diag)) break;
    dt *= 0.5;
  }

  states_ = std::move(out);
  mesh_.nodes = xnew;
  t_ += dt;
  ++step_count_;
  diag.time = t_;
  diag.dt = dt;
  diag.retries = retries;
  collect_diagnostics(diag);
  history_.push_back(diag);
  return diag;
}

void Solver::advance_to(double t_end,
                        const std::function<void(const Solver&)>& per_step) {
  while (t_ < t_end - 1e-14 * std::max(1.0, std::abs(t_end))) {
    step(t_end - t_);
    if (per_step) per_step(*this);
  }
  t_ = std::max(t_, std::min(t_, t_end));
}

void Solver::collect_diagnostics(StepDiagnostics& d) const {
  const int NE = mesh_.num_tets();
  d.mass = 0.0;
  d.momentum.setZero();
  d.energy = 0.0;
  double minq = std::numeric_limits<double>::max();
  int flat = 0;
  for (int e = 0; e < NE; ++e) {
    const auto& t = mesh_.tets[e];
    double vol = signed_tet_volume(mesh_.nodes[t[0]], mesh_.nodes[t[1]],
                                   mesh_.nodes[t[2]], mesh_.nodes[t[3]]);
    double m, en;
    Vec3 mom;
    sys_->totals(states_.get(e), m, mom, en);
    d.mass += vol * m;
    d.momentum += vol * mom;
    d.energy += vol * en;
    double din = insphere_diameter(mesh_.nodes[t[0]], mesh_.nodes[t[1]],
                                   mesh_.nodes[t[2]], mesh_.nodes[t[3]]);
    double dc = circumsphere_diameter(mesh_.nodes[t[0]], mesh_.nodes[t[1]],
                                      mesh_.nodes[t[2]], mesh_.nodes[t[3]]);
    minq = std::min(minq, 3.0 * din / dc);
  }
  if (opt_.flattener)
    for (double f : flattener_.elem_f)
      if (f > 0.0) ++flat;
  d.min_quality = minq;
  d.flattener_active = flat;
}

StepDiagnostics Solver::totals() const {
  StepDiagnostics d;
  d.time = t_;
  collect_diagnostics(d);
  return d;
}

Vec4 Solver::gcl_residual(int e, const std::vector<Vec3>& xnew,
                          double dt) const {
  Vec4 acc = Vec4::Zero();
  for (int f = 0; f < 4; ++f) {
    auto fn = mesh_.face_nodes(e, f);
    Vec3 X0[3], X1[3];
    for (int i = 0; i < 3; ++i) {
      X0[i] = mesh_.nodes[fn[i]];
      X1[i] = xnew[fn[i]];
    }
    for (int q = 0; q < ftab_.npts; ++q) {
      Vec4 nu;
      double meas;
      if (!st_face_normal(X0, X1, dt, ftab_.chi1[q], ftab_.chi2[q],
                          ftab_.tau[q], nu, meas))
        continue;
      acc += ftab_.weight[q] * meas * nu;
    }
  }
  const auto& t = mesh_.tets[e];
  acc[3] += signed_tet_volume(xnew[t[0]], xnew[t[1]], xnew[t[2]], xnew[t[3]]);
  acc[3] -= signed_tet_volume(mesh_.nodes[t[0]], mesh_.nodes[t[1]],
                              mesh_.nodes[t[2]], mesh_.nodes[t[3]]);
  return acc;
}

}  // namespace tetraale
