#include "tetraale/stencil.hpp"

#include <algorithm>
#include <cmath>

namespace tetraale {

bool sector_contains(const Vec3& apex, const Vec3& d1, const Vec3& d2,
                     const Vec3& d3, const Vec3& p) {
  Mat3 D;
  D.col(0) = d1;
  D.col(1) = d2;
  D.col(2) = d3;
  double scale = d1.norm() * d2.norm() * d3.norm();
  double det = D.determinant();
  if (std::abs(det) < 1e-14 * scale) return false;
  Vec3 a = D.partialPivLu().solve(p - apex);
  return a.minCoeff() >= -1e-12;
}

namespace {

struct Candidate {
  double dist2;
  int elem;
  bool operator<(const Candidate& o) const {
    return dist2 != o.dist2 ? dist2 < o.dist2 : elem < o.elem;
  }
};

struct Grower {
  const std::vector<Vec3>& bary;
  std::vector<int>& stamp;
  int stamp_id = 0;

  bool seen(int e) const { return stamp[e] == stamp_id; }
  void mark(int e) { stamp[e] = stamp_id; }
};

// Breadth-first growth; each ring sorted by (barycenter distance, index).
// Returns true once `out` holds `ne` entries.
template <typename Neigh, typename Accept>
bool grow(Grower& g, std::vector<int>& out, int ne, int max_rings,
          Neigh&& neighbors, Accept&& accept) {
  std::vector<int> ring(out);
  std::vector<Candidate> cand;
  int rings = 0;
  const Vec3 center = g.bary[out[0]];
  while (static_cast<int>(out.size()) < ne &&
         (max_rings <= 0 || rings < max_rings)) {
    cand.clear();
    for (int e : ring)
      neighbors(e, [&](int nb) {
        if (g.seen(nb) || !accept(nb)) return;
        g.mark(nb);
        cand.push_back({(g.bary[nb] - center).squaredNorm(), nb});
      });
    if (cand.empty()) break;
    std::sort(cand.begin(), cand.end());
    ring.clear();
    for (const auto& c : cand) {
      ring.push_back(c.elem);
      if (static_cast<int>(out.size()) < ne) out.push_back(c.elem);
    }
    ++rings;
  }
  return static_cast<int>(out.size()) >= ne;
}

}  // namespace

StencilSet build_stencils(const TetMesh& mesh, int degree) {
  StencilSet ss;
  ss.degree = degree;
  ss.ne = stencil_size(degree);
  const int NE = mesh.num_tets();
  if (NE < ss.ne) throw MeshError("mesh too small for reconstruction stencils");
  ss.elems.assign(size_t(NE) * 9 * ss.ne, -1);
  ss.relaxed.assign(size_t(NE) * 9, 0);

  std::vector<Vec3> bary(NE);
  for (int e = 0; e < NE; ++e) bary[e] = mesh.barycenter(e);

  bool starved = false;

#pragma omp parallel
  {
    std::vector<int> stamp(NE, -1);
    Grower g{bary, stamp, -1};
    std::vector<int> out;

    auto face_neigh = [&](int e, auto&& visit) {
      for (int f = 0; f < 4; ++f) {
        int nb = mesh.face_neighbors[e][f];
        if (nb >= 0) visit(nb);
      }
    };
    auto vertex_neigh = [&](int e, auto&& visit) {
      for (int v : mesh.tets[e])
        for (int nb : mesh.vertex_tets[v])
          if (nb != e) visit(nb);
    };

#pragma omp for schedule(static)
    for (int e = 0; e < NE; ++e) {
      const auto& tet = mesh.tets[e];
      for (int s = 0; s < 9; ++s) {
        out.clear();
        out.push_back(e);
        ++g.stamp_id;
        g.mark(e);
        bool full;
        if (s == 0) {
          full = grow(g, out, ss.ne, 0, face_neigh, [](int) { return true; });
        } else {
          int k = (s - 1) % 4;
          bool backward = s > 4;
          Vec3 vk = mesh.nodes[tet[k]];
          Vec3 d[3];
          int m = 0;
          Vec3 fb = Vec3::Zero();
          for (int v = 0; v < 4; ++v) {
            if (v == k) continue;
            d[m++] = mesh.nodes[tet[v]] - vk;
            fb += mesh.nodes[tet[v]];
          }
          Vec3 apex = vk;
          if (backward) {
            apex = fb / 3.0;
            for (auto& dd : d) dd = -dd;
          }
          full = grow(g, out, ss.ne, 4, vertex_neigh, [&](int nb) {
            return sector_contains(apex, d[0], d[1], d[2], bary[nb]);
          });
          if (!full) {
            // Sector starved: complete by nearest-barycenter growth with the
            // sector constraint dropped.
            ss.relaxed[size_t(e) * 9 + s] = 1;
            full = grow(g, out, ss.ne, 0, vertex_neigh, [](int) { return true; });
          }
        }
        if (!full) {
#pragma omp atomic write
          starved = true;
          continue;
        }
        int* dst = ss.elems.data() + (size_t(e) * 9 + s) * ss.ne;
        std::copy(out.begin(), out.end(), dst);
      }
    }
  }
  if (starved) throw MeshError("stencil starvation: disconnected mesh region");
  return ss;
}

}  // namespace tetraale
