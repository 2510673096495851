#pragma once

#include <vector>

#include "tetraale/mesh.hpp"
#include "tetraale/types.hpp"

namespace tetraale {

/// Nine reconstruction stencils per element: one central (s=0, grown through
/// face neighbors), four forward sectors (s=1..4, vertex apex) and four
/// backward sectors (s=5..8, opposite-face apex, negated edge vectors), each
/// grown through vertex neighbors filtered by sector membership of the
/// candidate barycenter. Built once; the mesh connectivity never changes.
struct StencilSet {
  int degree = 0;
  int ne = 0;  // elements per stencil, 3*(M+1)(M+2)(M+3)/6
  std::vector<int> elems;        // [(elem*9 + s)*ne + j]
  std::vector<uint8_t> relaxed;  // per (elem, s): sector constraint dropped

  const int* stencil(int elem, int s) const {
    return elems.data() + (size_t(elem) * 9 + s) * ne;
  }
  bool was_relaxed(int elem, int s) const { return relaxed[size_t(elem) * 9 + s]; }
};

/// Membership of p in the cone spanned at `apex` by directions d1..d3:
/// p = apex + sum a_m d_m with all a_m >= -1e-12. Degenerate frames return
/// false for every point.
bool sector_contains(const Vec3& apex, const Vec3& d1, const Vec3& d2,
                     const Vec3& d3, const Vec3& p);

StencilSet build_stencils(const TetMesh& mesh, int degree);

}  // namespace tetraale
