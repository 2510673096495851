#include "tetraale/recon.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tetraale {

void weno_weights(const double sigma[9], double omega[9]) {
  // Scaled form: ratios ((sigma_min+eps)/(sigma_s+eps))^r stay in [0,1], so
  // huge indicators underflow harmlessly instead of overflowing.
  constexpr double eps = 1e-14;
  constexpr int r = 8;
  double smin = sigma[0];
  for (int s = 1; s < 9; ++s) smin = std::min(smin, sigma[s]);
  double sum = 0.0;
  for (int s = 0; s < 9; ++s) {
    double ratio = (smin + eps) / (sigma[s] + eps);
    double p = 1.0;
    for (int k = 0; k < r; ++k) p *= ratio;
    omega[s] = (s == 0 ? 1e5 : 1.0) * p;
    sum += omega[s];
  }
  for (int s = 0; s < 9; ++s) omega[s] /= sum;
}

Reconstructor::Reconstructor(const TetMesh& mesh, const StencilSet& stencils,
                             const SpatialBasis& basis, int nvar)
    : stencils_(stencils), basis_(basis), nvar_(nvar),
      quad_(tet_quadrature(std::max(1, basis.degree()))) {
  (void)mesh;
}

void Reconstructor::basis_means(const TetMesh& mesh, const RefMapping& frame,
                                int tet, double* row) const {
  const int msz = basis_.size();
  const auto& t = mesh.tets[tet];
  Vec3 v0 = frame.to_ref(mesh.nodes[t[0]]);
  Vec3 e1 = frame.to_ref(mesh.nodes[t[1]]) - v0;
  Vec3 e2 = frame.to_ref(mesh.nodes[t[2]]) - v0;
  Vec3 e3 = frame.to_ref(mesh.nodes[t[3]]) - v0;
  for (int l = 0; l < msz; ++l) row[l] = 0.0;
  double vals[56];
  for (int p = 0; p < quad_.size(); ++p) {
    const Vec3& q = quad_.points[p];
    Vec3 xi = v0 + q[0] * e1 + q[1] * e2 + q[2] * e3;
    basis_.eval(xi, vals);
    double w = 6.0 * quad_.weights[p];
    for (int l = 0; l < msz; ++l) row[l] += w * vals[l];
  }
}

namespace {

using RowMajorXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ReconScratch {
  std::vector<int> union_elems;
  std::vector<int> union_pos;   // stamp-indexed position lookup
  std::vector<int> stamp;
  int stamp_id = 0;
  RowMajorXd rows;              // union x msize
  Eigen::MatrixXd A;            // (ne-1) x (msize-1)
  Eigen::MatrixXd rhs;          // (ne-1) x nvar
  Eigen::MatrixXd wcand[9];     // (msize-1) x nvar higher-mode coefficients
};

}  // namespace

void Reconstructor::reconstruct(const TetMesh& mesh, const StateField& states,
                                ReconField& out) const {
  const int NE = mesh.num_tets();
  const int msz = basis_.size();
  const int ne = stencils_.ne;
  const int nv = nvar_;
  out.msize = msz;
  out.nvar = nv;
  out.coef.assign(size_t(NE) * msz * nv, 0.0);
  out.order_drop.assign(NE, 0);

  if (basis_.degree() == 0) {
    // Piecewise constant: coefficients are the averages themselves.
    for (int e = 0; e < NE; ++e)
      for (int v = 0; v < nv; ++v) out.coef[size_t(e) * nv + v] = states.ptr(e)[v];
    return;
  }

#ifdef _OPENMP
  const int nthreads = omp_get_max_threads();
#else
  const int nthreads = 1;
#endif
  std::vector<ReconScratch> scratch(nthreads);
  for (auto& s : scratch) {
    s.stamp.assign(NE, -1);
    s.union_pos.assign(NE, -1);
  }

#pragma omp parallel
  {
#ifdef _OPENMP
    ReconScratch& sc = scratch[omp_get_thread_num()];
#else
    ReconScratch& sc = scratch[0];
#endif

#pragma omp for schedule(static)
    for (int e = 0; e < NE; ++e) {
      RefMapping frame = mesh.mapping(e);

      // Distinct elements across the nine stencils; rows are shared.
      sc.union_elems.clear();
      ++sc.stamp_id;
      for (int s = 0; s < 9; ++s) {
        const int* st = stencils_.stencil(e, s);
        for (int j = 0; j < ne; ++j) {
          int g = st[j];
          if (sc.stamp[g] != sc.stamp_id) {
            sc.stamp[g] = sc.stamp_id;
            sc.union_pos[g] = static_cast<int>(sc.union_elems.size());
            sc.union_elems.push_back(g);
          }
        }
      }
      const int nu = static_cast<int>(sc.union_elems.size());
      sc.rows.resize(nu, msz);
      for (int u = 0; u < nu; ++u) {
        int g = sc.union_elems[u];
        if (g == e) {
          sc.rows.row(u).setZero();
          sc.rows(u, 0) = 1.0;
        } else {
          basis_means(mesh, frame, g, sc.rows.data() + size_t(u) * msz);
        }
      }

      const double* qe = states.ptr(e);
      bool dropped = false;

      for (int s = 0; s < 9 && !dropped; ++s) {
        const int* st = stencils_.stencil(e, s);
        sc.A.resize(ne - 1, msz - 1);
        sc.rhs.resize(ne - 1, nv);
        int r = 0;
        for (int j = 0; j < ne; ++j) {
          int g = st[j];
          if (g == e) continue;
          int u = sc.union_pos[g];
          // Exact conservation on the owner element: w_1 = Q_e, and every row
          // has mean 1 in the constant mode, so the reduced right side is
          // Q_j - Q_e.
          sc.A.row(r) = sc.rows.row(u).segment(1, msz - 1);
          const double* qj = states.ptr(g);
          for (int v = 0; v < nv; ++v) sc.rhs(r, v) = qj[v] - qe[v];
          ++r;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sc.A);
        qr.setThreshold(1e-10);
        if (qr.rank() < msz - 1) {
          dropped = true;
          break;
        }
        sc.wcand[s] = qr.solve(sc.rhs);
      }

      double* dst = out.elem(e);
      if (dropped) {
        out.order_drop[e] = 1;
        for (int v = 0; v < nv; ++v) dst[v] = qe[v];
        continue;
      }

      // Oscillation indicators and nonlinear combination, componentwise.
      const Eigen::MatrixXd& Sig = basis_.oscillation_matrix();
      auto Sig11 = Sig.block(1, 1, msz - 1, msz - 1);
      double sigma[9], omega[9];
      for (int v = 0; v < nv; ++v) {
        for (int s = 0; s < 9; ++s) {
          auto w = sc.wcand[s].col(v);
          sigma[s] = w.dot(Sig11 * w);
        }
        weno_weights(sigma, omega);
        dst[v] = qe[v];
        for (int l = 1; l < msz; ++l) {
          double acc = 0.0;
          for (int s = 0; s < 9; ++s) acc += omega[s] * sc.wcand[s](l - 1, v);
          dst[size_t(l) * nv + v] = acc;
        }
      }
    }
  }
}

void compute_flattener(const TetMesh& mesh, const SystemDescriptor& sys,
                       const StateField& states, FlattenerField& out) {
  const int NE = mesh.num_tets();
  const int NP = mesh.num_nodes();
  constexpr double k1 = 0.1;
  out.elem_f.assign(NE, 0.0);
  out.node_f.assign(NP, 0.0);

  std::vector<double> cs(NE);
  std::vector<Vec3> vel(NE);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < NE; ++e) {
    StateVec q = states.get(e);
    cs[e] = sys.sound_speed(q);
    vel[e] = sys.velocity(q);
  }

#pragma omp parallel for schedule(static)
  for (int e = 0; e < NE; ++e) {
    double vol = mesh.volume(e);
    double divv = 0.0;
    double cmin = cs[e];
    for (int f = 0; f < 4; ++f) {
      int nb = mesh.face_neighbors[e][f];
      if (nb < 0) continue;
      auto fn = mesh.face_nodes(e, f);
      const Vec3& a = mesh.nodes[fn[0]];
      Vec3 cross = (mesh.nodes[fn[1]] - a).cross(mesh.nodes[fn[2]] - a);
      double area = 0.5 * cross.norm();
      Vec3 n = cross.normalized();
      divv += area * (vel[nb] - vel[e]).dot(n);
      cmin = std::min(cmin, cs[nb]);
    }
    divv /= vol;
    double f = -(divv + k1 * cmin) / (k1 * cmin);
    out.elem_f[e] = std::min(1.0, std::max(0.0, f));
  }

  // Spread over vertex neighborhoods: node maximum, then element maximum.
  for (int v = 0; v < NP; ++v) {
    double m = 0.0;
    for (int e : mesh.vertex_tets[v]) m = std::max(m, out.elem_f[e]);
    out.node_f[v] = m;
  }
  std::vector<double> fe(NE);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < NE; ++e) {
    double m = 0.0;
    for (int v : mesh.tets[e]) m = std::max(m, out.node_f[v]);
    fe[e] = m;
  }
  out.elem_f = std::move(fe);
}

void apply_flattener(const SystemDescriptor& sys, const SpatialBasis& basis,
                     const std::vector<Vec3>& check_points,
                     const FlattenerField& f, ReconField& recon) {
  const int NE = static_cast<int>(f.elem_f.size());
  const int msz = recon.msize;
  const int nv = recon.nvar;
  if (msz == 1) return;

#pragma omp parallel
  {
    std::vector<double> vals(msz);
    StateVec q(nv);
#pragma omp for schedule(static)
    for (int e = 0; e < NE; ++e) {
      double* c = recon.elem(e);
      double blend = 1.0 - f.elem_f[e];
      for (int l = 1; l < msz; ++l)
        for (int v = 0; v < nv; ++v) c[size_t(l) * nv + v] *= blend;

      bool ok = true;
      for (const Vec3& xi : check_points) {
        basis.eval(xi, vals.data());
        for (int v = 0; v < nv; ++v) {
          double acc = 0.0;
          for (int l = 0; l < msz; ++l) acc += vals[l] * c[size_t(l) * nv + v];
          q[v] = acc;
        }
        if (!sys.admissible(q)) {
          ok = false;
          break;
        }
      }
      if (!ok) {
        // Recover the positivity preserving first order scheme.
        for (int l = 1; l < msz; ++l)
          for (int v = 0; v < nv; ++v) c[size_t(l) * nv + v] = 0.0;
      }
    }
  }
}

}  // namespace tetraale
