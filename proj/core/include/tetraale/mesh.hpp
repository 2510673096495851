#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tetraale/types.hpp"

namespace tetraale {

/// Affine map from the unit reference tetrahedron to a physical tetrahedron.
struct RefMapping {
  Vec3 x0;
  Mat3 J;     // columns X2-X1, X3-X1, X4-X1
  Mat3 Jinv;
  double detJ = 0.0;

  RefMapping() = default;
  RefMapping(const Vec3& x1, const Vec3& x2, const Vec3& x3, const Vec3& x4);

  Vec3 to_phys(const Vec3& xi) const { return x0 + J * xi; }
  Vec3 to_ref(const Vec3& x) const { return Jinv * (x - x0); }
  double signed_volume() const { return detJ / 6.0; }
};

/// Volume with tangled-element check (throws MeshError if not positive).
double tet_volume(const RefMapping& m);
double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Twice the inscribed-sphere radius: 6|T| / (sum of face areas).
double insphere_diameter(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
double circumsphere_diameter(const Vec3& a, const Vec3& b, const Vec3& c,
                             const Vec3& d);
double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

enum class BoundaryKind : uint8_t {
  None = 0,
  Periodic,
  Transmissive,
  SlipWall,
  MovingWall,
  Dirichlet,
};

const char* boundary_kind_name(BoundaryKind k);

struct BoundaryFace {
  int tet = -1;
  int face = -1;  // local face index
  BoundaryKind kind = BoundaryKind::None;
  int pair = -1;   // periodic partner boundary-face index
  Vec3 shift = Vec3::Zero();  // translation onto the partner face
  int tag = 0;     // case-specific id (wall number, dirichlet id)
};

/// Local vertex indices of face f (the face opposite vertex f), ordered so
/// the right-handed normal points outward for a positively oriented tet.
extern const int kFaceVerts[4][3];

struct TetMesh {
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 4>> tets;

  // Filled by build_adjacency:
  std::vector<std::array<int, 4>> face_neighbors;       // -1 on boundary
  std::vector<std::array<int8_t, 4>> neighbor_face;     // local face in neighbor
  std::vector<std::vector<int>> vertex_tets;            // sorted incidence
  std::vector<std::array<int, 4>> boundary_id;          // index into boundary_faces
  std::vector<BoundaryFace> boundary_faces;

  // Periodic node identification (filled by pair_periodic_faces):
  // group_rep[n] == n for free / representative nodes.
  std::vector<int> group_rep;
  std::vector<std::vector<int>> node_groups;  // members of each nontrivial group

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_tets() const { return static_cast<int>(tets.size()); }

  RefMapping mapping(int t) const {
    const auto& e = tets[t];
    return RefMapping(nodes[e[0]], nodes[e[1]], nodes[e[2]], nodes[e[3]]);
  }
  Vec3 barycenter(int t) const {
    const auto& e = tets[t];
    return 0.25 * (nodes[e[0]] + nodes[e[1]] + nodes[e[2]] + nodes[e[3]]);
  }
  double volume(int t) const { return tet_volume(mapping(t)); }

  std::array<int, 3> face_nodes(int t, int f) const {
    const auto& e = tets[t];
    return {e[kFaceVerts[f][0]], e[kFaceVerts[f][1]], e[kFaceVerts[f][2]]};
  }
};

/// Fill face adjacency, vertex incidence, and the boundary-face list.
/// Boundary faces are created untagged (kind None).
void build_adjacency(TetMesh& mesh);

/// Uniform box mesh: nx*ny*nz cells, each split into five tetrahedra with
/// alternating parity so shared faces conform.
TetMesh generate_box_mesh(const Vec3& lo, const Vec3& hi, int nx, int ny, int nz);

/// Piecewise sine skew of a [0,1]x[0,0.1]x[0,0.1] box mesh.
void saltzman_skew(TetMesh& mesh);

/// Shell octant (x,y,z >= 0, r_i <= |x| <= r_e) built from a structured
/// surface triangulation extruded radially; n_surf subdivisions per edge of
/// the spherical triangle, n_r radial layers.
TetMesh generate_shell_octant(double r_inner, double r_outer, int n_surf, int n_r);

/// Assign a boundary kind to all boundary faces whose centroid satisfies a
/// predicate; returns the number of faces tagged.
int tag_boundary(TetMesh& mesh, BoundaryKind kind,
                 const std::function<bool(const Vec3&)>& on_boundary, int tag = 0);

/// Pair Periodic-tagged faces related by any of the given translations
/// (matched by translated centroid within tol) and build periodic node groups.
void pair_periodic_faces(TetMesh& mesh, const std::vector<Vec3>& periods,
                         double tol = 1e-9);

TetMesh import_mesh(std::istream& in);
TetMesh import_mesh_file(const std::string& path);
void export_mesh(const TetMesh& mesh, std::ostream& out);
void export_mesh_file(const TetMesh& mesh, const std::string& path);

}  // namespace tetraale
