#include <doctest.h>

#include <cmath>
#include <vector>

#include "rd/amg.hpp"
#include "rd/assembly.hpp"
#include "rd/mesh.hpp"
#include "rd/target.hpp"

#include "oracles.hpp"

using namespace rd;

namespace {

SpMat path_laplacian(int n) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0);
    if (i + 1 < n) {
      t.emplace_back(i, i + 1, -1.0);
      t.emplace_back(i + 1, i, -1.0);
    }
  }
  return from_triplets(n, n, t);
}

SpMat interior_matrix(int n, double rho) {
  TetMesh mesh = build_structured_cube(n);
  return build_system(mesh, rho, target_smooth()).A;
}

}  // namespace

TEST_CASE("red-black coarsening of a path graph") {
  SpMat A = path_laplacian(5);
  auto [flags, P] = coarsen_redblack(A);
  REQUIRE(flags.size() == 5);
  CHECK(flags[0] == 1);
  CHECK(flags[1] == 0);
  CHECK(flags[2] == 1);
  CHECK(flags[3] == 0);
  CHECK(flags[4] == 1);
  REQUIRE(P.rows() == 5);
  REQUIRE(P.cols() == 3);
  CHECK(P.coeff(0, 0) == 1.0);
  CHECK(P.coeff(1, 0) == doctest::Approx(0.5));
  CHECK(P.coeff(1, 1) == doctest::Approx(0.5));
  CHECK(P.coeff(2, 1) == 1.0);
  CHECK(P.coeff(4, 2) == 1.0);
}

TEST_CASE("a diagonal matrix coarsens to itself") {
  SpMat A = from_triplets(3, 3, {{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, 3.0}});
  auto [flags, P] = coarsen_redblack(A);
  for (auto f : flags) CHECK(f == 1);
  CHECK(P.cols() == 3);
  CHECK((to_dense(P) - Mat::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("coarse set is independent and maximal in the matrix graph") {
  SpMat A = interior_matrix(4, 1e-2);
  auto [flags, P] = coarsen_redblack(A);
  const int* outer = A.outerIndexPtr();
  const int* inner = A.innerIndexPtr();
  for (int i = 0; i < A.rows(); ++i) {
    bool has_coarse_neighbor = false;
    for (int k = outer[i]; k < outer[i + 1]; ++k) {
      int j = inner[k];
      if (j == i) continue;
      if (flags[static_cast<size_t>(j)]) has_coarse_neighbor = true;
      if (flags[static_cast<size_t>(i)]) CHECK(!flags[static_cast<size_t>(j)]);
    }
    if (!flags[static_cast<size_t>(i)]) CHECK(has_coarse_neighbor);
  }
  // Fine rows of P average their coarse neighbors: unit row sums.
  Mat Pd = to_dense(P);
  for (int i = 0; i < Pd.rows(); ++i)
    CHECK(Pd.row(i).sum() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("galerkin coarse hand case") {
  SpMat A = from_triplets(2, 2, {{0, 0, 2.0}, {0, 1, -1.0}, {1, 0, -1.0},
                                 {1, 1, 2.0}});
  SpMat P = from_triplets(2, 1, {{0, 0, 1.0}, {1, 0, 0.5}});
  SpMat Ac = galerkin_coarse(A, P);
  REQUIRE(Ac.rows() == 1);
  CHECK(Ac.coeff(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("galerkin with the identity reproduces the matrix") {
  SpMat A = path_laplacian(7);
  std::vector<Triplet> t;
  for (int i = 0; i < 7; ++i) t.emplace_back(i, i, 1.0);
  SpMat I = from_triplets(7, 7, t);
  SpMat Ac = galerkin_coarse(A, I);
  CHECK((to_dense(Ac) - to_dense(A)).norm() == 0.0);
}

TEST_CASE("galerkin coarse equals the dense triple product") {
  SpMat A = interior_matrix(4, 1e-4);
  auto [flags, P] = coarsen_redblack(A);
  SpMat Ac = galerkin_coarse(A, P);
  Mat ref = to_dense(P).transpose() * to_dense(A) * to_dense(P);
  CHECK((to_dense(Ac) - ref).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("symmetric gauss-seidel hand sweep") {
  SpMat A = from_triplets(2, 2, {{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0},
                                 {1, 1, 2.0}});
  Vec f(2);
  f << 1.0, 1.0;
  Vec u = sgs_sweep(A, f, Vec::Zero(2));
  CHECK(u[0] == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(u[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("gauss-seidel is exact on diagonal systems") {
  SpMat A = from_triplets(2, 2, {{0, 0, 2.0}, {1, 1, 4.0}});
  Vec f(2);
  f << 2.0, 2.0;
  Vec u = sgs_sweep(A, f, Vec::Zero(2));
  CHECK(u[0] == 1.0);
  CHECK(u[1] == 0.5);
}

TEST_CASE("v-cycle is linear in the residual") {
  SpMat A = interior_matrix(4, 1e-6);
  AmgHierarchy h = build_amg(A, 16);
  int n = static_cast<int>(A.rows());
  Vec r1 = oracle::pseudo_random_vec(n, 1);
  Vec r2 = oracle::pseudo_random_vec(n, 2);
  Vec lhs = amg_apply(h, 2.0 * r1 - 3.0 * r2);
  Vec rhs = 2.0 * amg_apply(h, r1) - 3.0 * amg_apply(h, r2);
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("v-cycle is a symmetric positive operator") {
  SpMat A = interior_matrix(4, 1e-2);
  AmgHierarchy h = build_amg(A, 16);
  int n = static_cast<int>(A.rows());
  for (int s = 0; s < 5; ++s) {
    Vec r1 = oracle::pseudo_random_vec(n, 10 + s);
    Vec r2 = oracle::pseudo_random_vec(n, 20 + s);
    double left = r2.dot(amg_apply(h, r1));
    double right = r1.dot(amg_apply(h, r2));
    CHECK(left == doctest::Approx(right).epsilon(1e-11));
    CHECK(r1.dot(amg_apply(h, r1)) > 0.0);
  }
}

TEST_CASE("error propagation contracts") {
  SpMat A = interior_matrix(3, 1.0);
  AmgHierarchy h = build_amg(A, 4);
  Vec e = oracle::pseudo_random_vec(static_cast<int>(A.rows()), 5);
  double initial = e.norm();
  for (int k = 0; k < 50; ++k) e -= amg_apply(h, spmv(A, e));
  CHECK(e.norm() < 1e-6 * initial);
}

TEST_CASE("single-level hierarchy applies the exact inverse") {
  SpMat A = interior_matrix(3, 0.5);
  AmgHierarchy h = build_amg(A, 1000);
  CHECK(h.levels.size() == 1);
  Vec r = oracle::pseudo_random_vec(static_cast<int>(A.rows()), 9);
  Vec z = amg_apply(h, r);
  Vec ref = dense_cholesky_solve(to_dense(A), r);
  CHECK((z - ref).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("hierarchy levels shrink monotonically") {
  SpMat A = interior_matrix(6, 1e-4);
  AmgHierarchy h = build_amg(A, 8);
  CHECK(h.levels.size() >= 2);
  for (size_t l = 1; l < h.levels.size(); ++l)
    CHECK(h.levels[l].A.rows() < h.levels[l - 1].A.rows());
  // Galerkin identity holds on every level.
  for (size_t l = 0; l + 1 < h.levels.size(); ++l) {
    Mat ref = to_dense(h.levels[l].P).transpose() * to_dense(h.levels[l].A) *
              to_dense(h.levels[l].P);
    CHECK((to_dense(h.levels[l + 1].A) - ref).lpNorm<Eigen::Infinity>() <
          1e-12);
  }
}

TEST_CASE("preconditioned iteration counts stay robust in rho") {
  TetMesh mesh = build_structured_cube(8);
  TargetField target = target_smooth();
  auto iters = [&](double rho) {
    FemSystem sys = build_system(mesh, rho, target);
    AmgHierarchy h = build_amg(sys.A);
    PcgResult r = pcg(sys.A, amg_precond(h), sys.f, 1e-8, 200);
    REQUIRE(r.report.converged);
    return r.report.iterations;
  };
  int at_one = iters(1.0);
  int at_tiny = iters(1e-12);
  CHECK(at_one <= 30);
  CHECK(at_tiny <= 30);
  CHECK(at_tiny <= at_one + 2);
}

TEST_CASE("empty systems pass through") {
  SpMat A(0, 0);
  A.makeCompressed();
  AmgHierarchy h = build_amg(A);
  Vec z = amg_apply(h, Vec(0));
  CHECK(z.size() == 0);
}
