#pragma once

#include <functional>
#include <vector>

#include "rd/types.hpp"

namespace rd {

// Apply-contract for matrices and preconditioners: a fixed linear map.
using LinOp = std::function<Vec(const Vec&)>;

struct PcgReport {
  int iterations = 0;
  bool converged = false;
  // Relative preconditioned residual sqrt(r'P^-1 r)/sqrt(r0'P^-1 r0),
  // one entry per iteration.
  std::vector<double> residual_history;
};

struct PcgResult {
  Vec x;
  PcgReport report;
};

// Builds a compressed CSR matrix: duplicate triplets summed, columns sorted,
// exact zeros dropped.
SpMat from_triplets(int rows, int cols, const std::vector<Triplet>& trips);

Vec spmv(const SpMat& A, const Vec& x);

bool is_symmetric(const SpMat& A, double tol = 0.0);

Mat to_dense(const SpMat& A);

// Exact solve of an SPD dense system; throws std::runtime_error when the
// factorization hits a non-positive pivot.
Vec dense_cholesky_solve(const Mat& A, const Vec& b);

LinOp identity_precond();
LinOp jacobi_precond(const SpMat& A);

// Preconditioned conjugate gradients with zero initial guess. Stops when the
// relative preconditioned residual reaches tol; throws on p'Ap <= 0 or a
// negative preconditioned inner product (indefinite operator).
PcgResult pcg(const LinOp& apply_A, const LinOp& apply_P, const Vec& f,
              double tol = 1e-8, int max_iter = 500);
PcgResult pcg(const SpMat& A, const LinOp& apply_P, const Vec& f,
              double tol = 1e-8, int max_iter = 500);

}  // namespace rd
