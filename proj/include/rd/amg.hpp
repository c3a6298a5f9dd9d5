#pragma once

#include <Eigen/Cholesky>
#include <cstdint>
#include <utility>
#include <vector>

#include "rd/linalg.hpp"
#include "rd/types.hpp"

namespace rd {

struct AmgLevel {
  SpMat A;
  SpMat P;   // fine x coarse; empty on the coarsest level
  SpMat Pt;  // cached transpose used for restriction
  std::vector<std::uint8_t> coarse_flag;
};

struct AmgHierarchy {
  std::vector<AmgLevel> levels;  // levels[0] is the finest
  Eigen::LLT<Mat> coarsest_factorization;
  int smoothing_steps = 1;
};

// Greedy independent-set coarsening in ascending dof order: an unmarked dof
// becomes coarse, its unmarked neighbors become fine. Fine rows of P average
// their coarse neighbors; coarse rows are unit vectors.
std::pair<std::vector<std::uint8_t>, SpMat> coarsen_redblack(const SpMat& A);

SpMat galerkin_coarse(const SpMat& A, const SpMat& P);

// One forward then one backward Gauss-Seidel pass on A u = f, starting from u.
Vec sgs_sweep(const SpMat& A, const Vec& f, const Vec& u);

AmgHierarchy build_amg(const SpMat& A, int coarsest_threshold = 64,
                       int smoothing_steps = 1);

// One V-cycle applied to a residual, zero initial guess.
Vec amg_apply(const AmgHierarchy& h, const Vec& r);

LinOp amg_precond(const AmgHierarchy& h);

}  // namespace rd
