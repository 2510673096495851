#include "tetraale/motion.hpp"

#include <algorithm>
#include <cmath>

namespace tetraale {

Vec3 ns_cs(const std::vector<CornerContribution>& contribs) {
  double mu = 0.0;
  Vec3 v = Vec3::Zero();
  for (const auto& c : contribs) {
    mu += c.mass;
    v += c.mass * c.vel;
  }
  if (!(mu > 0.0)) throw MeshError("node solver: zero total mass");
  return v / mu;
}

namespace {

Mat3 impedance_matrix(const CornerContribution& c, const Vec3* vbar) {
  Mat3 M = Mat3::Zero();
  for (int f = 0; f < 3; ++f) {
    double S = c.area[f].norm();
    if (S <= 0.0) continue;
    Vec3 n = c.area[f] / S;
    double z = c.rho * c.c;
    if (vbar)
      z = c.rho * (c.c + c.gamma_imp * std::abs((*vbar - c.vel).dot(n)));
    M += z * S * (n * n.transpose());
  }
  return M;
}

Vec3 solve_constrained(const Mat3& M, const Vec3& rhs,
                       const std::vector<PlaneConstraint>& constraints) {
  // Orthonormalize the constraint normals; drop dependent planes.
  std::vector<Vec3> ns;
  std::vector<double> vns;
  for (const auto& pc : constraints) {
    Vec3 n = pc.n;
    double vn = pc.vn;
    for (size_t i = 0; i < ns.size(); ++i) {
      double d = n.dot(ns[i]);
      n -= d * ns[i];
      vn -= d * vns[i];
    }
    double nn = n.norm();
    if (nn < 1e-8) continue;
    ns.push_back(n / nn);
    vns.push_back(vn / nn);
  }
  const int nc = static_cast<int>(ns.size());
  if (nc == 0) return M.ldlt().solve(rhs);
  if (nc >= 3) {
    Vec3 v = Vec3::Zero();
    for (int i = 0; i < 3; ++i) v += vns[i] * ns[i];
    return v;
  }
  Vec3 vc = Vec3::Zero();
  for (int i = 0; i < nc; ++i) vc += vns[i] * ns[i];
  if (nc == 2) {
    Vec3 t = ns[0].cross(ns[1]).normalized();
    double m = t.dot(M * t);
    double y = t.dot(rhs - M * vc) / m;
    return vc + y * t;
  }
  Eigen::Matrix<double, 3, 2> T;
  Vec3 a = std::abs(ns[0][0]) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  T.col(0) = ns[0].cross(a).normalized();
  T.col(1) = ns[0].cross(T.col(0));
  Eigen::Matrix2d Mr = T.transpose() * M * T;
  Eigen::Vector2d yr = Mr.ldlt().solve(T.transpose() * (rhs - M * vc));
  return vc + T * yr;
}

}  // namespace

Vec3 ns_m(const std::vector<CornerContribution>& contribs,
          const std::vector<PlaneConstraint>& constraints, bool nonlinear,
          double* spd_min) {
  auto assemble = [&](const Vec3* vbar, Mat3& M, Vec3& rhs) {
    M.setZero();
    rhs.setZero();
    for (const auto& c : contribs) {
      Mat3 Mkj = impedance_matrix(c, vbar);
      Vec3 corner = c.area[0] + c.area[1] + c.area[2];
      M += Mkj;
      rhs += c.p * corner + Mkj * c.vel;
    }
  };

  Mat3 M;
  Vec3 rhs;
  assemble(nullptr, M, rhs);
  if (spd_min) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(M);
    *spd_min = es.eigenvalues().minCoeff();
  }
  Vec3 v = solve_constrained(M, rhs, constraints);
  if (!nonlinear) return v;

  Vec3 vprev = v;
  for (int it = 0; it < 20; ++it) {
    assemble(&v, M, rhs);
    Vec3 vnew = solve_constrained(M, rhs, constraints);
    double scale = 1.0 + vnew.norm();
    if ((vnew - v).norm() < 1e-12 * scale) return vnew;
    v = vnew;
  }
  // No fixed point: keep the linear-impedance solution.
  assemble(nullptr, M, rhs);
  (void)vprev;
  return solve_constrained(M, rhs, constraints);
}

double frobenius_condition(const Mat3& J) {
  double det = J.determinant();
  if (!(std::abs(det) > 0.0)) return std::numeric_limits<double>::infinity();
  Mat3 Jinv = J.inverse();
  double k = J.norm() * Jinv.norm();
  return std::isfinite(k) ? k : std::numeric_limits<double>::infinity();
}

namespace {

double goal_function(const Vec3& x,
                     const std::vector<std::array<Vec3, 3>>& opposite) {
  double K = 0.0;
  for (const auto& o : opposite) {
    Mat3 J;
    for (int r = 0; r < 3; ++r) J.row(r) = (o[r] - x).transpose();
    K += frobenius_condition(J);
  }
  return K;
}

bool valid_fan(const Vec3& x, const std::vector<std::array<Vec3, 3>>& opposite) {
  for (const auto& o : opposite)
    if (signed_tet_volume(x, o[0], o[1], o[2]) <= 0.0) return false;
  return true;
}

}  // namespace

Vec3 rezone_interior_step(const Vec3& xlag,
                          const std::vector<std::array<Vec3, 3>>& opposite,
                          double edge_scale) {
  double K0 = goal_function(xlag, opposite);
  if (!std::isfinite(K0)) {
    // Tangled Lagrangian fan: try the volume-weighted barycenter average.
    double wsum = 0.0;
    Vec3 xb = Vec3::Zero();
    for (const auto& o : opposite) {
      double w = std::abs(signed_tet_volume(xlag, o[0], o[1], o[2]));
      Vec3 bc = 0.25 * (xlag + o[0] + o[1] + o[2]);
      xb += w * bc;
      wsum += w;
    }
    if (wsum > 0.0) {
      xb /= wsum;
      if (valid_fan(xb, opposite)) return xb;
    }
    return xlag;
  }

  const double h = 1e-6 * edge_scale;
  Vec3 g;
  Mat3 H;
  double f0 = K0;
  for (int i = 0; i < 3; ++i) {
    Vec3 dp = Vec3::Zero(), dm = Vec3::Zero();
    dp[i] = h;
    dm[i] = -h;
    double fp = goal_function(xlag + dp, opposite);
    double fm = goal_function(xlag + dm, opposite);
    g[i] = (fp - fm) / (2.0 * h);
    H(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      Vec3 dij = Vec3::Zero();
      dij[i] = h;
      dij[j] = h;
      Vec3 dij2 = Vec3::Zero();
      dij2[i] = h;
      dij2[j] = -h;
      double fpp = goal_function(xlag + dij, opposite);
      double fpm = goal_function(xlag + dij2, opposite);
      double fmp = goal_function(xlag - dij2, opposite);
      double fmm = goal_function(xlag - dij, opposite);
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  if (!g.allFinite() || !H.allFinite()) return xlag;
  Eigen::FullPivLU<Mat3> lu(H);
  if (!lu.isInvertible()) return xlag;
  Vec3 xrez = xlag - lu.solve(g);
  if (!xrez.allFinite() || !valid_fan(xrez, opposite)) return xlag;
  if (goal_function(xrez, opposite) >= K0) return xlag;
  return xrez;
}

double deformation_weight(double kappa_max_rel) {
  // Condition number of an undeformed (rigidly moved) cell is 3 in the
  // Frobenius norm.
  double w = 1.0 - 3.0 / kappa_max_rel;
  return std::min(1.0, std::max(0.0, w));
}

MeshMotion::MeshMotion(const TetMesh& mesh, const SystemDescriptor& sys,
                       const STMatrices& mats)
    : sys_(sys), mats_(mats) {
  const int NP = mesh.num_nodes();
  node_info_.resize(NP);
  for (size_t b = 0; b < mesh.boundary_faces.size(); ++b) {
    const auto& bf = mesh.boundary_faces[b];
    auto fn = mesh.face_nodes(bf.tet, bf.face);
    for (int v : fn) {
      node_info_[v].bfaces.push_back(static_cast<int>(b));
      if (bf.kind == BoundaryKind::Dirichlet) node_info_[v].dirichlet = true;
    }
  }
  // Solve owners: group representatives and all un-grouped nodes.
  owners_.reserve(NP);
  for (int v = 0; v < NP; ++v) {
    int rep = mesh.group_rep.empty() ? v : mesh.group_rep[v];
    if (rep < 0) rep = v;
    if (rep == v) owners_.push_back(v);
  }
}

bool MeshMotion::move(const TetMesh& mesh, const StateField& states,
                      const PredictorField& pred, double t0, double dt,
                      const MotionOptions& opt, std::vector<Vec3>& xnew,
                      MotionStats* stats) const {
  const int NE = mesh.num_tets();
  const int NP = mesh.num_nodes();
  const int L = mats_.L;

  // Per-element candidate velocities (time-integrated vertex traces) and
  // node-solver state data.
  std::vector<Eigen::Matrix<double, 4, 3>> cand(NE);
  std::vector<double> pres(NE), imp_c(NE), rho(NE), vol(NE), gimp(NE);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < NE; ++e) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>
        V(pred.v(e), L, 3);
    cand[e] = mats_.vertex_trace * V;
    StateVec q = states.get(e);
    pres[e] = sys_.pressure(q);
    imp_c[e] = sys_.sound_speed(q);
    rho[e] = sys_.mass_density(q);
    gimp[e] = sys_.impedance_gamma(q);
    vol[e] = mesh.volume(e);
  }

  std::vector<Vec3> vbar(NP, Vec3::Zero());
  std::vector<uint8_t> prescribed_pos(NP, 0);
  xnew.assign(NP, Vec3::Zero());

  int spd_failures = 0;

#pragma omp parallel reduction(+ : spd_failures)
  {
    std::vector<CornerContribution> contribs;
    std::vector<PlaneConstraint> constraints;
    std::vector<Vec3> trans_planes;

#pragma omp for schedule(static)
    for (size_t oi = 0; oi < owners_.size(); ++oi) {
      int node = owners_[oi];

      if (node_info_[node].dirichlet && opt.dirichlet_position) {
        xnew[node] = opt.dirichlet_position(mesh.nodes[node], t0, dt);
        vbar[node] = (xnew[node] - mesh.nodes[node]) / dt;
        prescribed_pos[node] = 1;
        continue;
      }
      if (opt.mode == MeshVelocityMode::Eulerian) {
        vbar[node] = Vec3::Zero();
        continue;
      }
      if (opt.mode == MeshVelocityMode::Prescribed) {
        // Time-integrated prescribed field at the node.
        std::vector<double> gt, gw;
        gauss_legendre(mats_.degree + 1, gt, gw);
        Vec3 v = Vec3::Zero();
        for (size_t i = 0; i < gt.size(); ++i)
          v += gw[i] * opt.prescribed(mesh.nodes[node], t0 + gt[i] * dt);
        vbar[node] = v;
        continue;
      }

      // Gather contributions over the (periodic-union) fan.
      contribs.clear();
      constraints.clear();
      trans_planes.clear();

      auto gather_member = [&](int member) {
        for (int e : mesh.vertex_tets[member]) {
          int lv = 0;
          while (mesh.tets[e][lv] != member) ++lv;
          CornerContribution c;
          int fi = 0;
          for (int f = 0; f < 4; ++f) {
            if (f == lv) continue;
            auto fn = mesh.face_nodes(e, f);
            const Vec3& a = mesh.nodes[fn[0]];
            Vec3 av =
                0.5 * (mesh.nodes[fn[1]] - a).cross(mesh.nodes[fn[2]] - a);
            c.area[fi++] = av / 3.0;
          }
          c.p = pres[e];
          c.rho = rho[e];
          c.c = imp_c[e];
          c.gamma_imp = gimp[e];
          c.mass = rho[e] * vol[e];
          c.vel = cand[e].row(lv).transpose();
          contribs.push_back(c);
        }
        // Boundary handling: wall constraints and transmissive mirrors.
        for (int b : node_info_[member].bfaces) {
          const auto& bf = mesh.boundary_faces[b];
          auto fn = mesh.face_nodes(bf.tet, bf.face);
          const Vec3& a = mesh.nodes[fn[0]];
          Vec3 n =
              (mesh.nodes[fn[1]] - a).cross(mesh.nodes[fn[2]] - a).normalized();
          if (bf.kind == BoundaryKind::SlipWall) {
            constraints.push_back({n, 0.0});
          } else if (bf.kind == BoundaryKind::MovingWall) {
            Vec3 vw = opt.wall_velocity
                          ? opt.wall_velocity(bf.tag, mesh.nodes[member],
                                              t0 + 0.5 * dt)
                          : Vec3::Zero();
            constraints.push_back({n, vw.dot(n)});
          } else if (bf.kind == BoundaryKind::Transmissive) {
            bool dup = false;
            for (const auto& tp : trans_planes)
              if (std::abs(tp.dot(n)) > 1.0 - 1e-8) dup = true;
            if (!dup) trans_planes.push_back(n);
          }
        }
      };

      if (!mesh.group_rep.empty() && mesh.group_rep[node] == node) {
        bool grouped = false;
        for (const auto& g : mesh.node_groups) {
          if (g[0] != node) continue;
          grouped = true;
          for (int member : g) gather_member(member);
          break;
        }
        if (!grouped) gather_member(node);
      } else {
        gather_member(node);
      }

      // Mirror the whole fan across each distinct transmissive plane
      // (subset products close the fan at edges).
      if (!trans_planes.empty() && opt.solver != NodeSolverKind::ChengShu) {
        size_t base = contribs.size();
        int m = static_cast<int>(trans_planes.size());
        for (int mask = 1; mask < (1 << m); ++mask) {
          Mat3 R = Mat3::Identity();
          for (int i = 0; i < m; ++i)
            if (mask & (1 << i))
              R = (Mat3::Identity() -
                   2.0 * trans_planes[i] * trans_planes[i].transpose()) *
                  R;
          for (size_t ci = 0; ci < base; ++ci) {
            CornerContribution c = contribs[ci];
            for (int f = 0; f < 3; ++f) c.area[f] = R * c.area[f];
            // state copied, velocity copied (zero-gradient ghost)
            contribs.push_back(c);
          }
        }
      }

      Vec3 v;
      if (opt.solver == NodeSolverKind::ChengShu) {
        v = ns_cs(contribs);
        // project onto wall constraints
        std::vector<Vec3> ns;
        std::vector<double> vns;
        for (const auto& pc : constraints) {
          Vec3 n = pc.n;
          double vn = pc.vn;
          for (size_t i = 0; i < ns.size(); ++i) {
            double d = n.dot(ns[i]);
            n -= d * ns[i];
            vn -= d * vns[i];
          }
          if (n.norm() < 1e-8) continue;
          vn /= n.norm();
          n.normalize();
          ns.push_back(n);
          vns.push_back(vn);
        }
        for (size_t i = 0; i < ns.size(); ++i)
          v += (vns[i] - v.dot(ns[i])) * ns[i];
      } else {
        double spd = 0.0;
        v = ns_m(contribs, constraints,
                 opt.solver == NodeSolverKind::MaireNonlinear, &spd);
        if (!(spd > 0.0)) ++spd_failures;
      }
      vbar[node] = v;
    }
  }

  // Propagate group velocities and integrate positions.
  if (!mesh.group_rep.empty())
    for (int v = 0; v < NP; ++v) {
      int rep = mesh.group_rep[v];
      if (rep >= 0 && rep != v) vbar[v] = vbar[rep];
    }
  std::vector<Vec3> xlag(NP);
  for (int v = 0; v < NP; ++v)
    xlag[v] = prescribed_pos[v] ? xnew[v] : mesh.nodes[v] + dt * vbar[v];

  int rezoned = 0;
  if (!opt.rezoning) {
    xnew = xlag;
  } else {
    xnew = xlag;
#pragma omp parallel reduction(+ : rezoned)
    {
      std::vector<std::array<Vec3, 3>> opposite;
      std::vector<PlaneConstraint> planes;
#pragma omp for schedule(static)
      for (int node = 0; node < NP; ++node) {
        if (prescribed_pos[node]) continue;
        if (!mesh.group_rep.empty() && mesh.group_rep[node] >= 0 &&
            !mesh.vertex_tets[node].empty() && mesh.group_rep[node] != node)
          continue;  // periodic members follow their representative
        bool periodic_member = false;
        for (int b : node_info_[node].bfaces)
          if (mesh.boundary_faces[b].kind == BoundaryKind::Periodic)
            periodic_member = true;
        if (periodic_member) continue;
        bool moving_or_dirichlet = false;
        for (int b : node_info_[node].bfaces) {
          auto k = mesh.boundary_faces[b].kind;
          if (k == BoundaryKind::Dirichlet) moving_or_dirichlet = true;
        }
        if (moving_or_dirichlet) continue;

        // Relative-deformation relaxation weight.
        double kmax = 3.0;
        for (int e : mesh.vertex_tets[node]) {
          const auto& t = mesh.tets[e];
          Mat3 J0, J1;
          for (int r = 0; r < 3; ++r) {
            J0.col(r) = mesh.nodes[t[r + 1]] - mesh.nodes[t[0]];
            J1.col(r) = xlag[t[r + 1]] - xlag[t[0]];
          }
          double det0 = J0.determinant();
          if (std::abs(det0) <= 0.0) continue;
          kmax = std::max(kmax, frobenius_condition(J1 * J0.inverse()));
        }
        double omega = deformation_weight(kmax);
        if (omega <= 0.0) continue;

        opposite.clear();
        for (int e : mesh.vertex_tets[node]) {
          const auto& t = mesh.tets[e];
          int lv = 0;
          while (t[lv] != node) ++lv;
          std::array<Vec3, 3> o;
          for (int r = 0; r < 3; ++r) o[r] = xlag[t[kFaceVerts[lv][r]]];
          opposite.push_back(o);
        }

        Vec3 xrez;
        if (node_info_[node].bfaces.empty()) {
          double hsc = 0.0;
          for (const auto& o : opposite)
            hsc = std::max(hsc, (o[0] - xlag[node]).norm());
          xrez = rezone_interior_step(xlag[node], opposite, hsc);
        } else {
          // Feasible-set style average projected back onto the boundary
          // entity; corner nodes (3 independent planes) stay put.
          double wsum = 0.0;
          Vec3 xb = Vec3::Zero();
          for (const auto& o : opposite) {
            double w = std::abs(signed_tet_volume(xlag[node], o[0], o[1], o[2]));
            xb += w * 0.25 * (xlag[node] + o[0] + o[1] + o[2]);
            wsum += w;
          }
          if (!(wsum > 0.0)) continue;
          xb /= wsum;
          planes.clear();
          for (int b : node_info_[node].bfaces) {
            const auto& bf = mesh.boundary_faces[b];
            auto fn = mesh.face_nodes(bf.tet, bf.face);
            Vec3 n = (xlag[fn[1]] - xlag[fn[0]])
                         .cross(xlag[fn[2]] - xlag[fn[0]])
                         .normalized();
            bool dup = false;
            for (auto& pl : planes)
              if (std::abs(pl.n.dot(n)) > 1.0 - 1e-6) dup = true;
            if (!dup) planes.push_back({n, 0.0});
          }
          if (planes.size() >= 3) continue;  // corner: pinned
          for (const auto& pl : planes)
            xb -= pl.n * pl.n.dot(xb - xlag[node]);
          xrez = valid_fan(xb, opposite) ? xb : xlag[node];
        }

        Vec3 xr = xlag[node] + omega * (xrez - xlag[node]);
        if ((xr - xlag[node]).squaredNorm() > 0.0) {
          xnew[node] = xr;
          ++rezoned;
        }
      }
    }
  }

  double minvol = std::numeric_limits<double>::max();
  bool ok = true;
#pragma omp parallel for schedule(static) reduction(min : minvol)
  for (int e = 0; e < NE; ++e) {
    const auto& t = mesh.tets[e];
    double v = signed_tet_volume(xnew[t[0]], xnew[t[1]], xnew[t[2]], xnew[t[3]]);
    minvol = std::min(minvol, v);
  }
  if (!(minvol > 0.0)) ok = false;

  if (stats) {
    stats->spd_failures = spd_failures;
    stats->rezoned_nodes = rezoned;
    stats->min_volume = minvol;
  }
  return ok;
}

}  // namespace tetraale
