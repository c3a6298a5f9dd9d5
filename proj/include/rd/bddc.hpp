#pragma once

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <cstdint>
#include <memory>
#include <vector>

#include "rd/assembly.hpp"
#include "rd/linalg.hpp"
#include "rd/mesh.hpp"
#include "rd/types.hpp"

namespace rd {

using SpMatCol = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct Partition {
  int p = 0;
  std::vector<int> owner;                        // per tet
  std::vector<std::vector<int>> dof_subdomains;  // per interior dof, ascending
  std::vector<std::uint8_t> is_interface;        // multiplicity >= 2
};

// Recursive coordinate bisection of tet centroids along the longest box
// axis; subdomain tet counts stay balanced within +-1 at every split.
Partition partition_geometric(const TetMesh& mesh, const DofMap& dof_map, int p);

struct BddcSubdomain {
  std::vector<int> tets;
  std::vector<int> interior;        // owned interior-dof ids, ascending
  std::vector<int> boundary;        // touching interface-dof ids, ascending
  std::vector<int> boundary_index;  // their positions in the interface numbering
  std::unique_ptr<Eigen::SimplicialLLT<SpMatCol>> interior_llt;
  SpMat A_IB;  // assembled blocks between owned interiors and the interface
  SpMat A_BI;
  Mat S;  // local Schur complement of the subdomain (Neumann) matrix
  Mat C;  // primal constraint rows over the local interface
  std::vector<int> primal_index;  // global primal id per constraint row
  Eigen::PartialPivLU<Mat> saddle_lu;  // of [[S, C'],[C, 0]]
  Mat Phi;                             // constrained minimal-energy basis
  Vec scaling;                         // per boundary dof, 1/multiplicity
};

struct BddcOperator {
  Partition partition;
  std::vector<int> interface_dofs;   // ascending
  std::vector<int> interface_index;  // per interior dof, -1 when not interface
  SpMat A_CC;                        // assembled interface block
  std::vector<BddcSubdomain> subs;
  int n_primal = 0;
  Mat coarse_matrix;  // sum over subdomains of Phi' S Phi, on primal ids
  Eigen::LLT<Mat> coarse_llt;
};

BddcOperator build_bddc(const TetMesh& mesh, const FemSystem& sys,
                        const Partition& partition);

// y = A_CC x - sum_i A_CI^i (A_II^i)^-1 A_IC^i x
Vec schur_apply(const BddcOperator& op, const Vec& x);

// g = f_C - A_CI A_II^-1 f_I
Vec reduce_rhs(const BddcOperator& op, const Vec& f);

// Back-substitutes subdomain interiors: u_I = A_II^-1 (f_I - A_IC u_C).
Vec expand_solution(const BddcOperator& op, const Vec& u_C, const Vec& f);

// Scaled subdomain corrections with vanishing primal values plus the coarse
// correction through the constrained basis.
Vec bddc_apply(const BddcOperator& op, const Vec& r);

LinOp schur_op(const BddcOperator& op);
LinOp bddc_precond(const BddcOperator& op);

const Mat& coarse_basis(const BddcOperator& op, int sub);

struct BddcSolveResult {
  Vec u;  // full interior-dof solution
  PcgReport report;
};

// Partition, reduce to the interface, PCG with the BDDC preconditioner,
// expand.
BddcSolveResult bddc_solve(const TetMesh& mesh, const FemSystem& sys, int p,
                           double tol = 1e-8, int max_iter = 500);

}  // namespace rd
