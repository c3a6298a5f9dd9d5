#pragma once

#include <array>
#include <vector>

#include "rd/types.hpp"

namespace rd {

// Quadrature rule on the reference tetrahedron, stored in barycentric
// coordinates. Weights sum to 1; integrals over a physical tet are
// volume * sum_q w_q f(x_q).
struct TetRule {
  // points(q, k) = barycentric coordinate k of point q, k in 0..3.
  Mat points;
  Vec weights;

  int size() const { return static_cast<int>(weights.size()); }
};

// Degree-1 exact: single centroid point.
const TetRule& tet_rule_centroid();

// Degree-2 exact: 4 symmetric points.
const TetRule& tet_rule_degree2();

// Degree-5 exact: 14 points (Keast).
const TetRule& tet_rule_degree5();

// Composite rule for integrands with jumps: equal-weight centroids of the
// depth-3 uniform 4-way subdivision of the reference tet (64 points).
const TetRule& tet_rule_subdivision64();

// Physical quadrature points for a tet with vertex coordinates v[0..3].
// Row q of the result is points.row(q) applied to the vertices.
Mat tet_rule_physical_points(const TetRule& rule,
                             const std::array<Vec3, 4>& v);

}  // namespace rd
