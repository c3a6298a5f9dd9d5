#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rd/types.hpp"

namespace rd {

// Conforming tetrahedral mesh of the unit cube. Tet vertex order is
// semantic: it encodes the bisection ordering, so it must not be permuted.
struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<std::uint8_t> boundary_vertex;
  // Bisection tag d in {1,2,3}: the refinement edge of tet t joins local
  // vertices 0 and d.
  std::vector<std::uint8_t> refinement_edge;
  std::vector<std::int32_t> generation;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_tets() const { return static_cast<int>(tets.size()); }
};

struct MeshStats {
  int n_vertices = 0;
  int n_tets = 0;
  int n_interior_dofs = 0;
  double h_max = 0.0;
  double h_min = 0.0;
};

// Uniform n x n x n lattice, each cell split into 6 tets sharing the cell
// diagonal (Kuhn subdivision), ordered and tagged for bisection.
TetMesh build_structured_cube(int n);

// Three full bisection sweeps: every tet is replaced by 8 children, edge
// lengths halve.
TetMesh uniform_refine(const TetMesh& mesh);

// Bisects the marked tets at their refinement edges, then recursively
// bisects until the mesh is conforming again.
TetMesh bisect_marked(const TetMesh& mesh, const std::vector<int>& marked);

MeshStats mesh_stats(const TetMesh& mesh);

std::array<Vec3, 4> tet_vertices(const TetMesh& mesh, int t);

// Unsigned volume.
double tet_volume(const TetMesh& mesh, int t);

}  // namespace rd
