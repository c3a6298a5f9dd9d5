#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rd/adapt.hpp"
#include "rd/amg.hpp"
#include "rd/linalg.hpp"
#include "rd/target.hpp"

#include "oracles.hpp"

using namespace rd;

namespace {

TargetField zero_target() {
  TargetField t;
  t.evaluator = [](const Vec3&) { return 0.0; };
  t.smoothness_tag = Smoothness::smooth_h2;
  t.quadrature_order_hint = 1;
  return t;
}

SystemSolver dense_solver() {
  return [](const TetMesh&, const FemSystem& sys) {
    PcgResult r;
    r.x = dense_cholesky_solve(to_dense(sys.A), sys.f);
    r.report.converged = true;
    return r;
  };
}

SystemSolver amg_solver(double tol) {
  return [tol](const TetMesh&, const FemSystem& sys) {
    AmgHierarchy h = build_amg(sys.A);
    return pcg(sys.A, amg_precond(h), sys.f, tol, 500);
  };
}

Estimate hand_estimate(std::vector<double> etas) {
  Estimate e;
  e.per_tet = Vec(static_cast<int>(etas.size()));
  double sq = 0.0;
  for (size_t i = 0; i < etas.size(); ++i) {
    e.per_tet[static_cast<int>(i)] = etas[i];
    sq += etas[i] * etas[i];
  }
  e.global = std::sqrt(sq);
  return e;
}

}  // namespace

TEST_CASE("zero target gives a zero solution and zero indicator") {
  TetMesh mesh = build_structured_cube(3);
  FemSystem sys = build_system(mesh, 0.01, zero_target());
  Solution sol = make_solution(mesh, sys, Vec::Zero(sys.f.size()));
  Estimate est = estimate(sol, zero_target());
  CHECK(est.global == 0.0);
  CHECK(est.per_tet.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("indicator is nonnegative and localized") {
  TetMesh mesh = build_structured_cube(4);
  TargetField target = target_box();
  FemSystem sys = build_system(mesh, 1e-2, target);
  Vec u = dense_cholesky_solve(to_dense(sys.A), sys.f);
  Estimate est = estimate(make_solution(mesh, sys, u), target);
  REQUIRE(est.per_tet.size() == mesh.n_tets());
  double sq = 0.0;
  for (int t = 0; t < mesh.n_tets(); ++t) {
    CHECK(est.per_tet[t] >= 0.0);
    sq += est.per_tet[t] * est.per_tet[t];
  }
  CHECK(est.global == doctest::Approx(std::sqrt(sq)).epsilon(1e-13));
  CHECK(est.global > 0.0);
}

TEST_CASE("estimator brackets the energy error against a refined reference") {
  // Nested spaces: |||u_h - u_H|||^2 = u_h'f_h - u_H'f_H by Galerkin
  // orthogonality, which stands in for the unknown true error.
  TargetField target = target_smooth();
  double rho = 1e-2;
  TetMesh coarse = build_structured_cube(4);
  FemSystem sys_c = build_system(coarse, rho, target);
  Vec u_c = dense_cholesky_solve(to_dense(sys_c.A), sys_c.f);
  Estimate est = estimate(make_solution(coarse, sys_c, u_c), target);

  TetMesh fine = uniform_refine(coarse);
  FemSystem sys_f = build_system(fine, rho, target);
  AmgHierarchy h = build_amg(sys_f.A);
  Vec u_f = pcg(sys_f.A, amg_precond(h), sys_f.f, 1e-12, 500).x;

  double err_sq = u_f.dot(sys_f.f) - u_c.dot(sys_c.f);
  REQUIRE(err_sq > 0.0);
  double err = std::sqrt(err_sq);
  CHECK(est.global > err / 20.0);
  CHECK(est.global < err * 20.0);
}

TEST_CASE("dorfler marking hand cases") {
  Estimate a = hand_estimate({3.0, 0.0, 0.0, 0.0});
  CHECK(mark_dorfler(a, 0.5) == std::vector<int>{0});

  Estimate b = hand_estimate({2.0, 2.0, 1.0});
  std::vector<int> marked = mark_dorfler(b, 0.8);
  REQUIRE(marked.size() == 2);
  CHECK(((marked[0] == 0 && marked[1] == 1) ||
         (marked[0] == 1 && marked[1] == 0)));
}

TEST_CASE("theta one marks exactly the positive indicators") {
  Estimate e = hand_estimate({1.0, 0.0, 2.0, 0.0, 0.5});
  std::vector<int> marked = mark_dorfler(e, 1.0);
  std::vector<int> sorted_marked = marked;
  std::sort(sorted_marked.begin(), sorted_marked.end());
  CHECK(sorted_marked == std::vector<int>{0, 2, 4});
}

TEST_CASE("marking is minimal") {
  Estimate e = hand_estimate({3.0, 2.0, 2.0, 1.0});
  // total squared = 18, theta^2 * total = 6.48, largest indicator alone
  // carries 9.
  CHECK(mark_dorfler(e, 0.6).size() == 1);
}

TEST_CASE("marking validates theta") {
  Estimate e = hand_estimate({1.0});
  CHECK_THROWS_AS(mark_dorfler(e, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mark_dorfler(e, 1.5), std::invalid_argument);
}

TEST_CASE("adaptive loop reaches the dof budget with growing meshes") {
  TargetField target = target_box();
  TetMesh initial = build_structured_cube(4);
  AdaptResult res = adaptive_solve(initial, target, 1e-2, 800, amg_solver(1e-10));
  REQUIRE(res.history.size() >= 2);
  for (size_t l = 1; l < res.history.size(); ++l) {
    CHECK(res.history[l].dofs > res.history[l - 1].dofs);
    CHECK(res.history[l].level == static_cast<int>(l));
  }
  CHECK(res.history.back().dofs >= 800);
  CHECK(res.history.back().eta < res.history.front().eta);
  CHECK(res.history.back().err_l2_sq < res.history.front().err_l2_sq);
  CHECK(static_cast<int>(res.coefficients.size()) == res.history.back().dofs);
  CHECK(oracle::mesh_conforming(res.mesh));
}

TEST_CASE("budget below the initial dof count returns a single level") {
  TargetField target = target_box();
  TetMesh initial = build_structured_cube(4);
  AdaptResult res = adaptive_solve(initial, target, 1e-2, 5, dense_solver());
  CHECK(res.history.size() == 1);
  CHECK(res.history[0].dofs == 27);
  CHECK(res.mesh.n_tets() == initial.n_tets());
}

TEST_CASE("history records errors measured against the target") {
  TargetField target = target_box();
  TetMesh initial = build_structured_cube(4);
  AdaptResult res = adaptive_solve(initial, target, 0.1, 20, dense_solver());
  REQUIRE(res.history.size() == 1);
  FemSystem sys = build_system(initial, 0.1, target);
  Solution sol = make_solution(initial, sys, res.coefficients);
  CHECK(res.history[0].err_l2_sq ==
        doctest::Approx(l2_error_target_squared(sol, target)).epsilon(1e-10));
  Vec r = target_residual(sol);
  double hm1 = hminus1_norm(sys, r);
  CHECK(res.history[0].err_hm1_sq ==
        doctest::Approx(hm1 * hm1).epsilon(1e-8));
}
