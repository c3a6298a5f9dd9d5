#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rd/mesh.hpp"
#include "rd/types.hpp"

namespace rd {

// MatrixMarket coordinate format (1-based, general). Values round-trip
// exactly through %.17g.
void write_matrix_market(const std::string& path, const SpMat& A);
SpMat read_matrix_market(const std::string& path);

// Dense vectors in MatrixMarket array format (n x 1).
void write_vector_market(const std::string& path, const Vec& v);
Vec read_vector_market(const std::string& path);

// Legacy ASCII VTK unstructured grid (cell type 10) with optional per-vertex
// and per-cell scalar fields.
void write_vtk(const std::string& path, const TetMesh& mesh,
               const std::vector<std::pair<std::string, Vec>>& point_fields = {},
               const std::vector<std::pair<std::string, Vec>>& cell_fields = {});

}  // namespace rd
