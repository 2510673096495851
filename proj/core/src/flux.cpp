#include "tetraale/flux.hpp"

#include <cmath>

namespace tetraale {

bool st_face_normal(const Vec3 X0[3], const Vec3 X1[3], double dt, double chi1,
                    double chi2, double tau, Vec4& n_unit, double& measure) {
  // Spatial tangents are tau-blends of the end-time edge vectors; the tau
  // tangent interpolates the node displacements and carries dt in time.
  Vec3 a = (X0[1] - X0[0]) * (1.0 - tau) + (X1[1] - X1[0]) * tau;
  Vec3 b = (X0[2] - X0[0]) * (1.0 - tau) + (X1[2] - X1[0]) * tau;
  Vec3 c = (1.0 - chi1 - chi2) * (X1[0] - X0[0]) + chi1 * (X1[1] - X0[1]) +
           chi2 * (X1[2] - X0[2]);
  Vec3 axb = a.cross(b);
  Vec4 n;
  n.head<3>() = dt * axb;
  n[3] = -axb.dot(c);
  measure = n.norm();
  if (!(measure > 0.0)) return false;
  n_unit = n / measure;
  return true;
}

void path_jump(const SystemDescriptor& sys, const StateVec& qm,
               const StateVec& qp, const Vec4& n_unit, StateVec& D) {
  const int nv = sys.nvar();
  D.setZero(nv);
  if (!sys.has_nonconservative()) return;
  double nsnorm = n_unit.head<3>().norm();
  if (!(nsnorm > 0.0)) return;
  Vec3 n = n_unit.head<3>() / nsnorm;

  static const double gs[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
  static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

  StateVec dq = qp - qm;
  StateVec psi(nv);
  StateMat Bn;
  StateMat Bsum = StateMat::Zero(nv, nv);
  for (int g = 0; g < 3; ++g) {
    psi = qm + gs[g] * dq;
    if (!sys.admissible(psi)) psi = gs[g] < 0.5 ? qm : qp;
    sys.ncp_matrix_n(psi, n, Bn);
    Bsum += gw[g] * Bn;
  }
  D = 0.5 * nsnorm * (Bsum * dq);
}

void FaceFlux::operator()(const StateVec& qm, const StateVec& qp,
                          const Vec4& n_unit, StateVec& G,
                          StateVec* D_out) const {
  const int nv = sys_.nvar();
  double nsnorm = n_unit.head<3>().norm();
  Vec3 n = nsnorm > 0.0 ? Vec3(n_unit.head<3>() / nsnorm) : Vec3(1, 0, 0);
  double vn = nsnorm > 0.0 ? -n_unit[3] / nsnorm : 0.0;

  FluxMat F(nv, 3);
  sys_.flux(qm, F);
  G = F * n_unit.head<3>() + n_unit[3] * qm;
  sys_.flux(qp, F);
  G += F * n_unit.head<3>() + n_unit[3] * qp;
  G *= 0.5;
  if (D_out) D_out->setZero(nv);

  StateVec dq = qp - qm;
  if (dq.cwiseAbs().maxCoeff() == 0.0) return;

  if (sys_.has_nonconservative()) {
    StateVec D(nv);
    path_jump(sys_, qm, qp, n_unit, D);
    G += D;
    if (D_out) *D_out = D;
  }

  if (kind_ == FluxKind::Rusanov) {
    double lmax = std::max(sys_.max_abs_eigenvalue(qm, n, vn),
                           sys_.max_abs_eigenvalue(qp, n, vn));
    G -= 0.5 * nsnorm * lmax * dq;
  } else {
    static const double gs[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
    static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    StateVec psi(nv), ad(nv);
    for (int g = 0; g < 3; ++g) {
      psi = qm + gs[g] * dq;
      if (!sys_.admissible(psi)) psi = gs[g] < 0.5 ? qm : qp;
      if (!sys_.abs_jacobian_apply(psi, n, vn, nsnorm, dq, ad))
        ad = nsnorm * sys_.max_abs_eigenvalue(psi, n, vn) * dq;
      G -= 0.5 * gw[g] * ad;
    }
  }
}

const int kPerm3[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                          {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

int face_permutation_id(const int owner_triple[3], const int nbr_triple[3]) {
  for (int p = 0; p < 6; ++p) {
    bool ok = true;
    for (int i = 0; i < 3; ++i)
      if (nbr_triple[kPerm3[p][i]] != owner_triple[i]) ok = false;
    if (ok) return p;
  }
  return -1;
}

FaceTables build_face_tables(const STBasis& st, int tri_exactness,
                             int tau_points) {
  FaceTables ft;
  ft.L = st.size();
  Quadrature tri = triangle_quadrature(tri_exactness);
  std::vector<double> gt, gw;
  gauss_legendre(tau_points, gt, gw);
  ft.npts = tri.size() * static_cast<int>(gt.size());
  ft.chi1.reserve(ft.npts);
  for (size_t it = 0; it < gt.size(); ++it) {
    for (int p = 0; p < tri.size(); ++p) {
      ft.chi1.push_back(tri.points[p][0]);
      ft.chi2.push_back(tri.points[p][1]);
      ft.tau.push_back(gt[it]);
      ft.weight.push_back(tri.weights[p] * gw[it]);
    }
  }

  const Vec3 refv[4] = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                        Vec3(0, 0, 1)};
  std::vector<double> th(ft.L);
  for (int f = 0; f < 4; ++f) {
    Vec3 A = refv[kFaceVerts[f][0]];
    Vec3 B = refv[kFaceVerts[f][1]];
    Vec3 C = refv[kFaceVerts[f][2]];
    ft.theta[f].resize(ft.npts, ft.L);
    for (int q = 0; q < ft.npts; ++q) {
      Vec3 xi = (1.0 - ft.chi1[q] - ft.chi2[q]) * A + ft.chi1[q] * B +
                ft.chi2[q] * C;
      st.eval(Vec4(xi[0], xi[1], xi[2], ft.tau[q]), th.data());
      for (int l = 0; l < ft.L; ++l) ft.theta[f](q, l) = th[l];
    }
    for (int p = 0; p < 6; ++p) {
      Vec3 V[3] = {refv[kFaceVerts[f][kPerm3[p][0]]],
                   refv[kFaceVerts[f][kPerm3[p][1]]],
                   refv[kFaceVerts[f][kPerm3[p][2]]]};
      ft.theta_perm[f][p].resize(ft.npts, ft.L);
      for (int q = 0; q < ft.npts; ++q) {
        Vec3 xi = (1.0 - ft.chi1[q] - ft.chi2[q]) * V[0] + ft.chi1[q] * V[1] +
                  ft.chi2[q] * V[2];
        st.eval(Vec4(xi[0], xi[1], xi[2], ft.tau[q]), th.data());
        for (int l = 0; l < ft.L; ++l) ft.theta_perm[f][p](q, l) = th[l];
      }
    }
  }
  return ft;
}

}  // namespace tetraale
