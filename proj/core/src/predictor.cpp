#include "tetraale/predictor.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tetraale {

STMatrices assemble_st_matrices(const SpatialBasis& basis, const STBasis& st) {
  STMatrices m;
  m.degree = st.degree();
  m.L = st.size();
  m.msize = basis.size();
  const int L = m.L;

  Quadrature tq = tet_quadrature(2 * m.degree + 1);
  std::vector<double> gt, gw;
  gauss_legendre(m.degree + 1, gt, gw);

  m.K1.setZero(L, L);
  m.F0.setZero(L, m.msize);
  m.Mass.setZero(L, L);
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(L, 4);

  std::vector<double> th(L), dth(4 * L), psi(m.msize);
  for (int p = 0; p < tq.size(); ++p) {
    const Vec3& xi = tq.points[p];
    double wp = tq.weights[p];
    // Slices at tau = 1 and tau = 0.
    st.eval(Vec4(xi[0], xi[1], xi[2], 1.0), th.data());
    for (int k = 0; k < L; ++k)
      for (int l = 0; l < L; ++l) m.K1(k, l) += wp * th[k] * th[l];
    st.eval(Vec4(xi[0], xi[1], xi[2], 0.0), th.data());
    basis.eval(xi, psi.data());
    for (int k = 0; k < L; ++k) {
      for (int l = 0; l < m.msize; ++l) m.F0(k, l) += wp * th[k] * psi[l];
      double bary[4] = {1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]};
      for (int v = 0; v < 4; ++v) E(k, v) += wp * th[k] * bary[v];
    }
    // Space-time products.
    for (size_t it = 0; it < gt.size(); ++it) {
      Vec4 xt(xi[0], xi[1], xi[2], gt[it]);
      st.eval_grad(xt, th.data(), dth.data());
      double w = wp * gw[it];
      for (int k = 0; k < L; ++k)
        for (int l = 0; l < L; ++l) {
          m.Mass(k, l) += w * th[k] * th[l];
          m.K1(k, l) -= w * dth[4 * k + 3] * th[l];
        }
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m.K1);
  m.K1inv_F0 = lu.solve(m.F0);
  m.K1inv_M = lu.solve(m.Mass);
  m.K1inv_E = lu.solve(E);

  for (int d = 0; d < 4; ++d) m.dtheta[d].setZero(L, L);
  m.tau.resize(L);
  for (int l = 0; l < L; ++l) {
    const Vec4& node = st.nodes()[l];
    m.tau[l] = node[3];
    st.eval_grad(node, th.data(), dth.data());
    for (int mm = 0; mm < L; ++mm)
      for (int d = 0; d < 4; ++d) m.dtheta[d](l, mm) = dth[4 * mm + d];
  }

  // Time-integrated trace at the reference vertices (candidate velocities).
  m.vertex_trace.setZero(4, L);
  const Vec3 verts[4] = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                         Vec3(0, 0, 1)};
  std::vector<double> g2t, g2w;
  gauss_legendre(m.degree + 1, g2t, g2w);
  for (int v = 0; v < 4; ++v)
    for (size_t it = 0; it < g2t.size(); ++it) {
      st.eval(Vec4(verts[v][0], verts[v][1], verts[v][2], g2t[it]), th.data());
      for (int l = 0; l < L; ++l) m.vertex_trace(v, l) += g2w[it] * th[l];
    }
  return m;
}

bool metric_terms(const Mat3& Jx, const Vec3& xtau, double dt, Mat3& dxi_dx,
                  Vec3& dxi_dt, double& detJx) {
  detJx = Jx.determinant();
  if (!(detJx > 0.0) || !std::isfinite(detJx)) return false;
  dxi_dx = Jx.inverse();
  dxi_dt = -(dxi_dx * xtau) / dt;
  return true;
}

void PredictorField::resize(int num_elems) {
  qdof.assign(size_t(num_elems) * L * nvar, 0.0);
  vdof.assign(size_t(num_elems) * L * 3, 0.0);
  xdof.assign(size_t(num_elems) * L * 3, 0.0);
  if (with_source) sdof.assign(size_t(num_elems) * L * nvar, 0.0);
  if (with_ncp) pdof.assign(size_t(num_elems) * L * nvar, 0.0);
  iterations.assign(num_elems, 0);
  residuals.assign(num_elems, 0.0);
}

Predictor::Predictor(const SpatialBasis& basis, const STBasis& st,
                     const SystemDescriptor& sys)
    : basis_(basis), st_(st), sys_(sys), mats_(assemble_st_matrices(basis, st)) {
  const int L = st.size();
  psi_at_nodes_.resize(L, basis.size());
  std::vector<double> psi(basis.size());
  for (int l = 0; l < L; ++l) {
    const Vec4& n = st.nodes()[l];
    basis_.eval(Vec3(n[0], n[1], n[2]), psi.data());
    for (int m = 0; m < basis.size(); ++m) psi_at_nodes_(l, m) = psi[m];
  }
}

namespace {

using MatLN = Eigen::MatrixXd;

struct PredScratch {
  MatLN Q, Qnew, H, S, P, B;       // L x nv
  MatLN G[4];                      // reference gradients of Q
  MatLN Fh[3];                     // flux dofs per direction
  MatLN FG[3][3];                  // d(F_pd)/d(xi_rd)
  MatLN V, Vnew, X, Xnew;          // L x 3
  MatLN XG[4];                     // geometry gradients
};

}  // namespace

bool Predictor::solve_element(const TetMesh& mesh, int e, const ReconField& recon,
                              double t0, double dt, const PredictorOptions& opt,
                              PredictorField& out) const {
  const int L = mats_.L;
  const int nv = sys_.nvar();
  const int max_iter =
      opt.max_iter > 0 ? opt.max_iter : 2 * (st_.degree() + 1) + 10;

  thread_local PredScratch sc;
  sc.Q.resize(L, nv);
  sc.H.resize(L, nv);
  sc.V.resize(L, 3);
  sc.X.resize(L, 3);

  const bool with_src = sys_.has_source();
  const bool with_ncp = sys_.has_nonconservative();
  if (with_ncp) sc.P.resize(L, nv);

  // Initial guess: constant-in-tau extension of the reconstruction.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      W(recon.elem(e), recon.msize, nv);
  sc.Q = psi_at_nodes_ * W;

  const auto& tet = mesh.tets[e];
  Eigen::Matrix<double, 4, 3> Xv;
  for (int v = 0; v < 4; ++v) Xv.row(v) = mesh.nodes[tet[v]].transpose();
  double href = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      href = std::max(href, (Xv.row(a) - Xv.row(b)).norm());

  // Reference geometry at t^n evaluated at the spatial node positions.
  MatLN X0(L, 3);
  for (int l = 0; l < L; ++l) {
    const Vec4& n = st_.nodes()[l];
    double bary[4] = {1.0 - n[0] - n[1] - n[2], n[0], n[1], n[2]};
    Vec3 x = Vec3::Zero();
    for (int v = 0; v < 4; ++v) x += bary[v] * Xv.row(v).transpose();
    X0.row(l) = x.transpose();
  }

  StateVec qn(nv), sv(nv), pv(nv);
  auto node_velocity = [&](int l, const StateVec& q, const Vec3& x) -> Vec3 {
    switch (opt.mode) {
      case MeshVelocityMode::Lagrangian: return sys_.velocity(q);
      case MeshVelocityMode::Eulerian: return Vec3::Zero();
      case MeshVelocityMode::Prescribed:
        return opt.prescribed(x, t0 + mats_.tau[l] * dt);
    }
    return Vec3::Zero();
  };

  for (int l = 0; l < L; ++l) {
    qn = sc.Q.row(l).transpose();
    if (!sys_.admissible(qn)) return false;
    Vec3 x0l = X0.row(l).transpose();
    Vec3 vel = node_velocity(l, qn, x0l);
    sc.V.row(l) = vel.transpose();
    sc.X.row(l) = (x0l + mats_.tau[l] * dt * vel).transpose();
  }

  const Eigen::MatrixXd rhs0 = mats_.K1inv_F0 * W;   // L x nv
  const Eigen::MatrixXd xrhs0 = mats_.K1inv_E * Xv;  // L x 3

  const double qscale = 1.0 + sc.Q.cwiseAbs().maxCoeff();
  double res = 1e30;
  int it = 0;
  StateMat srcJ;

  for (it = 0; it < max_iter; ++it) {
    // Reference gradients of state, flux and geometry at the nodes.
    for (int d = 0; d < 4; ++d) {
      sc.G[d].noalias() = mats_.dtheta[d] * sc.Q;
      sc.XG[d].noalias() = mats_.dtheta[d] * sc.X;
    }
    for (int d = 0; d < 3; ++d) sc.Fh[d].resize(L, nv);
    FluxMat F(nv, 3);
    for (int l = 0; l < L; ++l) {
      qn = sc.Q.row(l).transpose();
      if (!sys_.admissible(qn)) return false;
      sys_.flux(qn, F);
      for (int d = 0; d < 3; ++d) sc.Fh[d].row(l) = F.col(d).transpose();
    }
    for (int pd = 0; pd < 3; ++pd)
      for (int rd = 0; rd < 3; ++rd)
        sc.FG[pd][rd].noalias() = mats_.dtheta[rd] * sc.Fh[pd];

    sc.H.resize(L, nv);
    if (with_ncp) sc.P.setZero(L, nv);
    StateGrad gphys(nv, 3);
    for (int l = 0; l < L; ++l) {
      Mat3 Jx;
      for (int rd = 0; rd < 3; ++rd) Jx.col(rd) = sc.XG[rd].row(l).transpose();
      Vec3 xtau = sc.XG[3].row(l).transpose();
      Mat3 dxi_dx;
      Vec3 dxi_dt;
      double detJx;
      if (!metric_terms(Jx, xtau, dt, dxi_dx, dxi_dt, detJx)) return false;

      for (int v = 0; v < nv; ++v) {
        double acc = 0.0;
        for (int rd = 0; rd < 3; ++rd) acc += sc.G[rd](l, v) * dxi_dt[rd];
        // div F in physical coordinates: dxi_dx(rd,pd) = d xi_rd / d x_pd.
        for (int pd = 0; pd < 3; ++pd)
          for (int rd = 0; rd < 3; ++rd)
            acc += dxi_dx(rd, pd) * sc.FG[pd][rd](l, v);
        sc.H(l, v) = acc;
      }
      if (with_ncp) {
        qn = sc.Q.row(l).transpose();
        for (int v = 0; v < nv; ++v)
          for (int pd = 0; pd < 3; ++pd) {
            double acc = 0.0;
            for (int rd = 0; rd < 3; ++rd)
              acc += dxi_dx(rd, pd) * sc.G[rd](l, v);
            gphys(v, pd) = acc;
          }
        sys_.nonconservative_product(qn, gphys, pv);
        sc.P.row(l) = pv.transpose();
        sc.H.row(l) += pv.transpose();
      }
    }

    sc.Qnew.noalias() = rhs0 - dt * (mats_.K1inv_M * sc.H);
    if (with_src) {
      // Implicit diagonal treatment: per-node Newton on
      //   q_l - dt D_ll S(q_l) = qnew_l + dt sum_{m != l} D_lm S(q_m^r),
      // with the off-diagonal sum lagged at the previous iterate.
      sc.S.resize(L, nv);
      for (int l = 0; l < L; ++l) {
        qn = sc.Q.row(l).transpose();
        sys_.source(qn, sv);
        sc.S.row(l) = sv.transpose();
      }
      Eigen::MatrixXd off = mats_.K1inv_M * sc.S;
      for (int l = 0; l < L; ++l) {
        double dll = mats_.K1inv_M(l, l);
        Eigen::VectorXd rhs = sc.Qnew.row(l).transpose() +
                              dt * (off.row(l).transpose() -
                                    dll * sc.S.row(l).transpose());
        StateVec x = sc.Q.row(l).transpose();
        for (int nit = 0; nit < 12; ++nit) {
          sys_.source(x, sv);
          StateVec R = x - dt * dll * sv - StateVec(rhs);
          if (R.cwiseAbs().maxCoeff() < 1e-13 * qscale) break;
          sys_.source_jacobian(x, srcJ);
          StateMat J = StateMat::Identity(nv, nv) - dt * dll * srcJ;
          x -= J.partialPivLu().solve(R);
        }
        if (!x.allFinite()) return false;
        sc.Qnew.row(l) = x.transpose();
      }
    }

    // Geometry update from the new velocity dofs.
    sc.Vnew.resize(L, 3);
    for (int l = 0; l < L; ++l) {
      qn = sc.Qnew.row(l).transpose();
      if (!qn.allFinite()) return false;
      Vec3 x = sc.X.row(l).transpose();
      sc.Vnew.row(l) = node_velocity(l, qn, x).transpose();
    }
    sc.Xnew.noalias() = xrhs0 + dt * (mats_.K1inv_M * sc.Vnew);

    double rq = (sc.Qnew - sc.Q).cwiseAbs().maxCoeff() / qscale;
    double rx = (sc.Xnew - sc.X).cwiseAbs().maxCoeff() / href;
    sc.Q.swap(sc.Qnew);
    sc.X.swap(sc.Xnew);
    sc.V.swap(sc.Vnew);
    res = std::max(rq, rx);
    if (res < opt.tol) break;
  }
  if (res >= opt.tol) return false;

  // Commit dofs.
  double* qd = out.q(e);
  double* vd = out.v(e);
  double* xd = out.x(e);
  for (int l = 0; l < L; ++l) {
    for (int v = 0; v < nv; ++v) qd[size_t(l) * nv + v] = sc.Q(l, v);
    for (int d = 0; d < 3; ++d) {
      vd[size_t(l) * 3 + d] = sc.V(l, d);
      xd[size_t(l) * 3 + d] = sc.X(l, d);
    }
  }
  if (with_src) {
    double* sd = out.sdof.data() + size_t(e) * L * nv;
    for (int l = 0; l < L; ++l) {
      qn = sc.Q.row(l).transpose();
      sys_.source(qn, sv);
      for (int v = 0; v < nv; ++v) sd[size_t(l) * nv + v] = sv[v];
    }
  }
  if (with_ncp) {
    double* pd = out.pdof.data() + size_t(e) * L * nv;
    for (int l = 0; l < L; ++l)
      for (int v = 0; v < nv; ++v) pd[size_t(l) * nv + v] = sc.P(l, v);
  }
  out.iterations[e] = it + 1;
  out.residuals[e] = res;
  return true;
}

int Predictor::solve_all(const TetMesh& mesh, const ReconField& recon, double t0,
                         double dt, const PredictorOptions& opt,
                         PredictorField& out) const {
  const int NE = mesh.num_tets();
  out.L = mats_.L;
  out.nvar = sys_.nvar();
  out.with_source = sys_.has_source();
  out.with_ncp = sys_.has_nonconservative();
  out.resize(NE);

  int failures = 0;
#pragma omp parallel for schedule(static) reduction(+ : failures)
  for (int e = 0; e < NE; ++e) {
    if (failures > 0) continue;
    if (!solve_element(mesh, e, recon, t0, dt, opt, out)) ++failures;
  }
  return failures;
}

}  // namespace tetraale
