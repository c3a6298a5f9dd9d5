#include "rd/linalg.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "rd/parallel.hpp"

namespace rd {

SpMat from_triplets(int rows, int cols, const std::vector<Triplet>& trips) {
  SpMat A(rows, cols);
  A.setFromTriplets(trips.begin(), trips.end());
  A.prune([](int, int, double v) { return v != 0.0; });
  A.makeCompressed();
  return A;
}

Vec spmv(const SpMat& A, const Vec& x) {
  if (A.cols() != x.size()) throw std::invalid_argument("spmv: dimension mismatch");
  Vec y(A.rows());
  const int* rp = A.outerIndexPtr();
  const int* ci = A.innerIndexPtr();
  const double* v = A.valuePtr();
  parallel_for(A.rows(), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      double s = 0.0;
      for (int k = rp[i]; k < rp[i + 1]; ++k) s += v[k] * x[ci[k]];
      y[i] = s;
    }
  });
  return y;
}

bool is_symmetric(const SpMat& A, double tol) {
  if (A.rows() != A.cols()) return false;
  SpMat D = SpMat(A.transpose()) - A;
  for (int i = 0; i < D.outerSize(); ++i)
    for (SpMat::InnerIterator it(D, i); it; ++it)
      if (std::abs(it.value()) > tol) return false;
  return true;
}

Mat to_dense(const SpMat& A) { return Mat(A); }

Vec dense_cholesky_solve(const Mat& A, const Vec& b) {
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("dense_cholesky_solve: matrix not positive definite");
  return llt.solve(b);
}

LinOp identity_precond() {
  return [](const Vec& r) { return r; };
}

LinOp jacobi_precond(const SpMat& A) {
  Vec d = A.diagonal();
  for (int i = 0; i < d.size(); ++i)
    if (d[i] <= 0.0) throw std::runtime_error("jacobi_precond: non-positive diagonal");
  return [d](const Vec& r) { return (r.array() / d.array()).matrix(); };
}

PcgResult pcg(const LinOp& apply_A, const LinOp& apply_P, const Vec& f,
              double tol, int max_iter) {
  PcgResult out;
  out.x = Vec::Zero(f.size());
  Vec r = f;
  Vec z = apply_P(r);
  double rz = r.dot(z);
  if (rz < 0.0) throw std::runtime_error("pcg: preconditioner not positive definite");
  const double rz0 = rz;
  if (rz0 == 0.0) {
    out.report.converged = true;
    return out;
  }
  Vec p = z;
  for (int it = 1; it <= max_iter; ++it) {
    const Vec Ap = apply_A(p);
    const double pAp = p.dot(Ap);
    if (pAp <= 0.0)
      throw std::runtime_error("pcg: operator not positive definite (p'Ap <= 0)");
    const double alpha = rz / pAp;
    out.x += alpha * p;
    r -= alpha * Ap;
    z = apply_P(r);
    const double rz_next = r.dot(z);
    if (rz_next < 0.0)
      throw std::runtime_error("pcg: preconditioner not positive definite");
    const double rel = std::sqrt(rz_next / rz0);
    out.report.iterations = it;
    out.report.residual_history.push_back(rel);
    if (rel <= tol) {
      out.report.converged = true;
      return out;
    }
    const double beta = rz_next / rz;
    rz = rz_next;
    p = z + beta * p;
  }
  return out;
}

PcgResult pcg(const SpMat& A, const LinOp& apply_P, const Vec& f, double tol,
              int max_iter) {
  return pcg([&A](const Vec& x) { return spmv(A, x); }, apply_P, f, tol, max_iter);
}

}  // namespace rd
