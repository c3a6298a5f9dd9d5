#pragma once

#include <functional>
#include <vector>

#include "rd/linalg.hpp"
#include "rd/mesh.hpp"
#include "rd/target.hpp"
#include "rd/types.hpp"

namespace rd {

// Interior-dof <-> mesh-vertex bijection (homogeneous Dirichlet data is
// eliminated, so systems live on interior vertices only).
struct DofMap {
  std::vector<int> vertex_to_dof;  // -1 on boundary vertices
  std::vector<int> dof_to_vertex;

  int n_dofs() const { return static_cast<int>(dof_to_vertex.size()); }
};

DofMap interior_dof_map(const TetMesh& mesh);

struct FemSystem {
  double rho = 1.0;
  SpMat K;  // stiffness on interior dofs
  SpMat M;  // mass on interior dofs
  SpMat A;  // rho*K + M
  Vec f;    // load over interior dofs
  DofMap dof_map;
};

struct Solution {
  Vec coefficients;  // over interior dofs
  const FemSystem* system = nullptr;  // non-owning
  const TetMesh* mesh = nullptr;      // non-owning
};

SpMat assemble_stiffness(const TetMesh& mesh);
SpMat assemble_mass(const TetMesh& mesh);
Vec assemble_load(const TetMesh& mesh, const TargetField& target);

// Pre-elimination variants over all mesh vertices (row sums of K vanish,
// entries of M sum to the domain volume).
SpMat assemble_stiffness_full(const TetMesh& mesh);
SpMat assemble_mass_full(const TetMesh& mesh);

FemSystem build_system(const TetMesh& mesh, double rho, const TargetField& target);

Solution make_solution(const TetMesh& mesh, const FemSystem& sys, Vec coefficients);

// rho*K + M assembled over a tet subset only (Neumann-style subdomain
// matrix), on the dof subset `dofs` (rows/cols follow its order); `dofs`
// must contain every interior dof touched by the subset.
SpMat assemble_subdomain_matrix(const TetMesh& mesh, const DofMap& dof_map,
                                double rho, const std::vector<int>& tets,
                                const std::vector<int>& dofs);

double l2_error(const Solution& sol, const std::function<double(const Vec3&)>& exact);
double h1_semi_error(const Solution& sol,
                     const std::function<Vec3(const Vec3&)>& exact_grad);

// ||target - u_h||_{L2}^2 with quadrature steered by the smoothness tag.
double l2_error_target_squared(const Solution& sol, const TargetField& target);

// Discrete dual norm sqrt(r' K^-1 r) of the interior residual vector r.
// The overload without a solver picks dense factorization for small systems
// and conjugate gradients otherwise; K_inv lets callers supply a faster
// approximate inverse (tolerances tighter than the norm's use require).
double hminus1_norm(const FemSystem& sys, const Vec& r);
double hminus1_norm_with(const FemSystem& sys, const Vec& r, const LinOp& K_inv);

// Residual of the target against the nodal basis: r = f - M u.
Vec target_residual(const Solution& sol);

// Nodal values over all mesh vertices, zero on the boundary.
Vec nodal_field(const TetMesh& mesh, const DofMap& dof_map, const Vec& coefficients);

// z_h(v) = (target(v) - u_h(v)) / rho at mesh vertices.
Vec recover_control(const Solution& sol, const TargetField& target);

}  // namespace rd
