#include "tetraale/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace tetraale {

const int kFaceVerts[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

const char* boundary_kind_name(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::None: return "none";
    case BoundaryKind::Periodic: return "periodic";
    case BoundaryKind::Transmissive: return "transmissive";
    case BoundaryKind::SlipWall: return "slip";
    case BoundaryKind::MovingWall: return "moving";
    case BoundaryKind::Dirichlet: return "dirichlet";
  }
  return "?";
}

RefMapping::RefMapping(const Vec3& x1, const Vec3& x2, const Vec3& x3,
                       const Vec3& x4)
    : x0(x1) {
  J.col(0) = x2 - x1;
  J.col(1) = x3 - x1;
  J.col(2) = x4 - x1;
  detJ = J.determinant();
  if (detJ != 0.0) Jinv = J.inverse();
}

double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c,
                         const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

double tet_volume(const RefMapping& m) {
  double v = m.signed_volume();
  if (!(v > 0.0)) throw MeshError("tangled element: non-positive volume");
  return v;
}

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  double v = signed_tet_volume(a, b, c, d);
  if (!(v > 0.0)) throw MeshError("tangled element: non-positive volume");
  return v;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

double insphere_diameter(const Vec3& a, const Vec3& b, const Vec3& c,
                         const Vec3& d) {
  double v = tet_volume(a, b, c, d);
  double s = triangle_area(b, c, d) + triangle_area(a, c, d) +
             triangle_area(a, b, d) + triangle_area(a, b, c);
  return 6.0 * v / s;
}

double circumsphere_diameter(const Vec3& a, const Vec3& b, const Vec3& c,
                             const Vec3& d) {
  Mat3 A;
  Vec3 rhs;
  A.row(0) = 2.0 * (b - a).transpose();
  A.row(1) = 2.0 * (c - a).transpose();
  A.row(2) = 2.0 * (d - a).transpose();
  rhs << b.squaredNorm() - a.squaredNorm(), c.squaredNorm() - a.squaredNorm(),
      d.squaredNorm() - a.squaredNorm();
  Vec3 center = A.partialPivLu().solve(rhs);
  return 2.0 * (center - a).norm();
}

namespace {

struct FaceKey {
  std::array<int, 3> v;  // sorted
  bool operator==(const FaceKey& o) const { return v == o.v; }
};
struct FaceKeyHash {
  size_t operator()(const FaceKey& k) const {
    size_t h = 1469598103934665603ull;
    for (int x : k.v) {
      h ^= static_cast<size_t>(x);
      h *= 1099511628211ull;
    }
    return h;
  }
};

}  // namespace

void build_adjacency(TetMesh& mesh) {
  const int ne = mesh.num_tets();
  const int np = mesh.num_nodes();
  for (int t = 0; t < ne; ++t)
    for (int v : mesh.tets[t])
      if (v < 0 || v >= np)
        throw MeshError("tet " + std::to_string(t) + " references invalid node");

  mesh.face_neighbors.assign(ne, {-1, -1, -1, -1});
  mesh.neighbor_face.assign(ne, {-1, -1, -1, -1});
  mesh.boundary_id.assign(ne, {-1, -1, -1, -1});
  mesh.boundary_faces.clear();

  std::unordered_map<FaceKey, std::pair<int, int>, FaceKeyHash> open;
  open.reserve(2 * ne);
  for (int t = 0; t < ne; ++t) {
    for (int f = 0; f < 4; ++f) {
      auto fn = mesh.face_nodes(t, f);
      FaceKey key{{fn[0], fn[1], fn[2]}};
      std::sort(key.v.begin(), key.v.end());
      auto it = open.find(key);
      if (it == open.end()) {
        open.emplace(key, std::make_pair(t, f));
      } else {
        auto [t2, f2] = it->second;
        if (t2 < 0) throw MeshError("non-manifold face: shared by >2 tets");
        mesh.face_neighbors[t][f] = t2;
        mesh.face_neighbors[t2][f2] = t;
        mesh.neighbor_face[t][f] = static_cast<int8_t>(f2);
        mesh.neighbor_face[t2][f2] = static_cast<int8_t>(f);
        it->second = {-1, -1};
      }
    }
  }
  for (int t = 0; t < ne; ++t) {
    for (int f = 0; f < 4; ++f) {
      if (mesh.face_neighbors[t][f] >= 0) continue;
      BoundaryFace bf;
      bf.tet = t;
      bf.face = f;
      mesh.boundary_id[t][f] = static_cast<int>(mesh.boundary_faces.size());
      mesh.boundary_faces.push_back(bf);
    }
  }

  mesh.vertex_tets.assign(np, {});
  for (int t = 0; t < ne; ++t)
    for (int v : mesh.tets[t]) mesh.vertex_tets[v].push_back(t);
  for (auto& lst : mesh.vertex_tets) std::sort(lst.begin(), lst.end());

  mesh.group_rep.assign(np, -1);
  mesh.node_groups.clear();
}

namespace {

// Five-tet decomposition of the unit cube; the odd-parity variant is the
// x-mirror so face diagonals conform between neighboring cells.
const int kCubeTets[5][4][3] = {
    {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
    {{1, 1, 0}, {0, 1, 0}, {1, 0, 0}, {1, 1, 1}},
    {{1, 0, 1}, {0, 0, 1}, {1, 1, 1}, {1, 0, 0}},
    {{0, 1, 1}, {1, 1, 1}, {0, 0, 1}, {0, 1, 0}},
    {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}},
};

}  // namespace

TetMesh generate_box_mesh(const Vec3& lo, const Vec3& hi, int nx, int ny, int nz) {
  if (nx <= 0 || ny <= 0 || nz <= 0)
    throw MeshError("box mesh needs positive cell counts");
  TetMesh mesh;
  const int npx = nx + 1, npy = ny + 1, npz = nz + 1;
  const Vec3 h((hi[0] - lo[0]) / nx, (hi[1] - lo[1]) / ny, (hi[2] - lo[2]) / nz);
  mesh.nodes.resize(size_t(npx) * npy * npz);
  auto node_id = [&](int i, int j, int k) { return (k * npy + j) * npx + i; };
  for (int k = 0; k < npz; ++k)
    for (int j = 0; j < npy; ++j)
      for (int i = 0; i < npx; ++i)
        mesh.nodes[node_id(i, j, k)] =
            lo + Vec3(i * h[0], j * h[1], k * h[2]);

  mesh.tets.reserve(size_t(nx) * ny * nz * 5);
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        bool odd = ((i + j + k) & 1) != 0;
        for (int t = 0; t < 5; ++t) {
          std::array<int, 4> tet;
          for (int v = 0; v < 4; ++v) {
            int dx = kCubeTets[t][v][0];
            int dy = kCubeTets[t][v][1];
            int dz = kCubeTets[t][v][2];
            if (odd) dx = 1 - dx;
            tet[v] = node_id(i + dx, j + dy, k + dz);
          }
          if (odd) std::swap(tet[2], tet[3]);  // restore positive orientation
          mesh.tets.push_back(tet);
        }
      }
    }
  }
  build_adjacency(mesh);
  return mesh;
}

void saltzman_skew(TetMesh& mesh) {
  const double pi = 3.14159265358979323846;
  for (auto& p : mesh.nodes) {
    double x = p[0], y = p[1], z = p[2];
    double xp;
    if (y <= 0.05)
      xp = x + (0.1 - z) * (1.0 - 20.0 * y) * std::sin(pi * x);
    else
      xp = x + z * (20.0 * y - 1.0) * std::sin(pi * x);
    p[0] = xp;
  }
}

TetMesh generate_shell_octant(double r_inner, double r_outer, int n_surf,
                              int n_r) {
  if (!(0.0 < r_inner && r_inner < r_outer) || n_surf < 1 || n_r < 1)
    throw MeshError("invalid shell octant parameters");
  TetMesh mesh;

  // Surface lattice on the spherical triangle spanned by the coordinate axes:
  // barycentric lattice of the planar triangle, normalized onto the sphere.
  const int n = n_surf;
  std::vector<std::vector<int>> vid(n + 1);
  std::vector<Vec3> surf;
  for (int i = 0; i <= n; ++i) {
    vid[i].resize(n - i + 1);
    for (int j = 0; j <= n - i; ++j) {
      double a = double(i) / n, b = double(j) / n, c = 1.0 - a - b;
      Vec3 p(a, b, c);
      vid[i][j] = static_cast<int>(surf.size());
      surf.push_back(p.normalized());
    }
  }
  struct Tri {
    int a, b, c;
  };
  std::vector<Tri> tris;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n - i; ++j) {
      tris.push_back({vid[i][j], vid[i + 1][j], vid[i][j + 1]});
      if (j < n - i - 1)
        tris.push_back({vid[i + 1][j], vid[i + 1][j + 1], vid[i][j + 1]});
    }
  }

  const int ns = static_cast<int>(surf.size());
  mesh.nodes.resize(size_t(ns) * (n_r + 1));
  for (int l = 0; l <= n_r; ++l) {
    double r = r_inner + (r_outer - r_inner) * double(l) / n_r;
    for (int s = 0; s < ns; ++s) mesh.nodes[size_t(l) * ns + s] = r * surf[s];
  }

  // Extrude each surface triangle into n_r prisms, split into three tets with
  // quad diagonals chosen toward the smallest global node id so neighboring
  // prisms conform.
  auto add_tet = [&](int a, int b, int c, int d) {
    std::array<int, 4> t{a, b, c, d};
    if (signed_tet_volume(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c],
                          mesh.nodes[d]) < 0.0)
      std::swap(t[2], t[3]);
    mesh.tets.push_back(t);
  };
  for (const auto& tri : tris) {
    for (int l = 0; l < n_r; ++l) {
      int base = l * ns, top = (l + 1) * ns;
      std::array<int, 6> p{base + tri.a, base + tri.b, base + tri.c,
                           top + tri.a,  top + tri.b,  top + tri.c};
      // Rotate so vertex 0 is the prism's smallest node id.
      int rot = 0;
      for (int r = 1; r < 3; ++r)
        if (p[r] < p[rot]) rot = r;
      std::array<int, 6> q;
      for (int r = 0; r < 3; ++r) {
        q[r] = p[(rot + r) % 3];
        q[r + 3] = p[(rot + r) % 3 + 3];
      }
      // Quad (1,2,5,4): diagonal through min(q1,q5) vs min(q2,q4).
      if (std::min(q[1], q[5]) < std::min(q[2], q[4])) {
        add_tet(q[0], q[1], q[2], q[5]);
        add_tet(q[0], q[1], q[5], q[4]);
        add_tet(q[0], q[4], q[5], q[3]);
      } else {
        add_tet(q[0], q[1], q[2], q[4]);
        add_tet(q[0], q[4], q[2], q[5]);
        add_tet(q[0], q[4], q[5], q[3]);
      }
    }
  }
  build_adjacency(mesh);
  return mesh;
}

int tag_boundary(TetMesh& mesh, BoundaryKind kind,
                 const std::function<bool(const Vec3&)>& on_boundary, int tag) {
  int count = 0;
  for (auto& bf : mesh.boundary_faces) {
    auto fn = mesh.face_nodes(bf.tet, bf.face);
    Vec3 centroid =
        (mesh.nodes[fn[0]] + mesh.nodes[fn[1]] + mesh.nodes[fn[2]]) / 3.0;
    if (on_boundary(centroid)) {
      bf.kind = kind;
      bf.tag = tag;
      ++count;
    }
  }
  return count;
}

void pair_periodic_faces(TetMesh& mesh, const std::vector<Vec3>& periods,
                         double tol) {
  const int nb = static_cast<int>(mesh.boundary_faces.size());
  std::vector<Vec3> centroids(nb);
  for (int b = 0; b < nb; ++b) {
    auto fn = mesh.face_nodes(mesh.boundary_faces[b].tet,
                              mesh.boundary_faces[b].face);
    centroids[b] =
        (mesh.nodes[fn[0]] + mesh.nodes[fn[1]] + mesh.nodes[fn[2]]) / 3.0;
  }

  std::vector<Vec3> shifts;
  for (const auto& p : periods) {
    shifts.push_back(p);
    shifts.push_back(-p);
  }

  for (int b = 0; b < nb; ++b) {
    auto& bf = mesh.boundary_faces[b];
    if (bf.kind != BoundaryKind::Periodic || bf.pair >= 0) continue;
    bool found = false;
    for (const auto& s : shifts) {
      for (int b2 = 0; b2 < nb; ++b2) {
        if (b2 == b || mesh.boundary_faces[b2].kind != BoundaryKind::Periodic)
          continue;
        if ((centroids[b] + s - centroids[b2]).norm() < tol) {
          bf.pair = b2;
          bf.shift = s;
          mesh.boundary_faces[b2].pair = b;
          mesh.boundary_faces[b2].shift = -s;
          found = true;
          break;
        }
      }
      if (found) break;
    }
    if (!found) throw MeshError("periodic face has no translated partner");
  }

  // Union-find over node identifications induced by the face pairing.
  const int np = mesh.num_nodes();
  std::vector<int> parent(np);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  for (int b = 0; b < nb; ++b) {
    const auto& bf = mesh.boundary_faces[b];
    if (bf.kind != BoundaryKind::Periodic) continue;
    const auto& pf = mesh.boundary_faces[bf.pair];
    auto fa = mesh.face_nodes(bf.tet, bf.face);
    auto fb = mesh.face_nodes(pf.tet, pf.face);
    for (int i = 0; i < 3; ++i) {
      Vec3 target = mesh.nodes[fa[i]] + bf.shift;
      int match = -1;
      for (int j = 0; j < 3; ++j)
        if ((mesh.nodes[fb[j]] - target).norm() < tol) match = fb[j];
      if (match < 0) throw MeshError("periodic faces are not translated copies");
      unite(fa[i], match);
    }
  }

  mesh.group_rep.assign(np, -1);
  std::map<int, std::vector<int>> groups;
  for (int v = 0; v < np; ++v) {
    int r = find(v);
    mesh.group_rep[v] = r;
    if (r != v || parent[v] != v) groups[r].push_back(v);
  }
  // A representative with no members is a free node; normalize rep->self.
  mesh.node_groups.clear();
  for (auto& [rep, members] : groups) {
    std::vector<int> g;
    g.push_back(rep);
    for (int m : members)
      if (m != rep) g.push_back(m);
    if (g.size() > 1) mesh.node_groups.push_back(g);
  }
}

TetMesh import_mesh(std::istream& in) {
  TetMesh mesh;
  std::string line;
  int lineno = 0;
  auto next_line = [&](std::istringstream& ss) {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      ss.clear();
      ss.str(line);
      return true;
    }
    return false;
  };

  std::istringstream ss;
  if (!next_line(ss)) throw MeshError("empty mesh file");
  std::string magic;
  int np = 0, ne = 0;
  if (!(ss >> magic >> np >> ne) || magic != "tetmesh")
    throw MeshError("line " + std::to_string(lineno) +
                    ": expected 'tetmesh <N_P> <N_E>'");
  if (np <= 0 || ne <= 0) throw MeshError("invalid mesh sizes");

  mesh.nodes.resize(np);
  for (int i = 0; i < np; ++i) {
    if (!next_line(ss)) throw MeshError("unexpected end of file in node list");
    if (!(ss >> mesh.nodes[i][0] >> mesh.nodes[i][1] >> mesh.nodes[i][2]))
      throw MeshError("line " + std::to_string(lineno) + ": bad node record");
  }
  mesh.tets.resize(ne);
  for (int i = 0; i < ne; ++i) {
    if (!next_line(ss)) throw MeshError("unexpected end of file in element list");
    auto& t = mesh.tets[i];
    if (!(ss >> t[0] >> t[1] >> t[2] >> t[3]))
      throw MeshError("line " + std::to_string(lineno) + ": bad element record");
    for (int v : t)
      if (v < 0 || v >= np)
        throw MeshError("line " + std::to_string(lineno) +
                        ": node index out of range");
  }

  build_adjacency(mesh);

  // Optional boundary-face tags: "b n1 n2 n3 <tag>".
  std::map<std::array<int, 3>, int> bmap;
  for (size_t b = 0; b < mesh.boundary_faces.size(); ++b) {
    auto fn = mesh.face_nodes(mesh.boundary_faces[b].tet,
                              mesh.boundary_faces[b].face);
    std::array<int, 3> key{fn[0], fn[1], fn[2]};
    std::sort(key.begin(), key.end());
    bmap[key] = static_cast<int>(b);
  }
  while (next_line(ss)) {
    std::string b;
    if (!(ss >> b) || b != "b")
      throw MeshError("line " + std::to_string(lineno) + ": expected 'b' record");
    std::array<int, 3> key;
    std::string tagname;
    if (!(ss >> key[0] >> key[1] >> key[2] >> tagname))
      throw MeshError("line " + std::to_string(lineno) + ": bad boundary record");
    std::sort(key.begin(), key.end());
    auto it = bmap.find(key);
    if (it == bmap.end())
      throw MeshError("line " + std::to_string(lineno) +
                      ": not a boundary face");
    auto& bf = mesh.boundary_faces[it->second];
    if (tagname == "periodic") bf.kind = BoundaryKind::Periodic;
    else if (tagname == "transmissive") bf.kind = BoundaryKind::Transmissive;
    else if (tagname == "slip") bf.kind = BoundaryKind::SlipWall;
    else if (tagname == "moving") bf.kind = BoundaryKind::MovingWall;
    else if (tagname == "dirichlet") bf.kind = BoundaryKind::Dirichlet;
    else
      throw MeshError("line " + std::to_string(lineno) + ": unknown tag '" +
                      tagname + "'");
  }
  return mesh;
}

TetMesh import_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file: " + path);
  return import_mesh(in);
}

void export_mesh(const TetMesh& mesh, std::ostream& out) {
  out << "tetmesh " << mesh.num_nodes() << " " << mesh.num_tets() << "\n";
  out.precision(17);
  for (const auto& p : mesh.nodes)
    out << p[0] << " " << p[1] << " " << p[2] << "\n";
  for (const auto& t : mesh.tets)
    out << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
  for (const auto& bf : mesh.boundary_faces) {
    if (bf.kind == BoundaryKind::None) continue;
    auto fn = mesh.face_nodes(bf.tet, bf.face);
    out << "b " << fn[0] << " " << fn[1] << " " << fn[2] << " "
        << boundary_kind_name(bf.kind) << "\n";
  }
}

void export_mesh_file(const TetMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot open output file: " + path);
  export_mesh(mesh, out);
}

}  // namespace tetraale
