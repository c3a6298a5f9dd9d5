#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "rd/assembly.hpp"
#include "rd/quadrature.hpp"

#include "oracles.hpp"

using namespace rd;

namespace {

// Hand-built single reference tet; all vertices flagged interior so the
// pre-elimination assembly paths can be inspected directly.
TetMesh reference_tet() {
  TetMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  m.tets = {{0, 1, 2, 3}};
  m.boundary_vertex = {0, 0, 0, 0};
  m.refinement_edge = {3};
  m.generation = {0};
  return m;
}

TargetField constant_target(double c) {
  TargetField t;
  t.evaluator = [c](const Vec3&) { return c; };
  t.smoothness_tag = Smoothness::smooth_h2;
  t.quadrature_order_hint = 1;
  return t;
}

double quadratic(const Vec3& x) { return x[0] * x[1] + 2.0 * x[2]; }

}  // namespace

TEST_CASE("reference tet stiffness") {
  TetMesh m = reference_tet();
  Mat K = to_dense(assemble_stiffness_full(m));
  REQUIRE(K.rows() == 4);
  CHECK(K(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(K(1, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  for (int i = 0; i < 4; ++i)
    CHECK(K.row(i).sum() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK((K - K.transpose()).norm() == doctest::Approx(0.0));
}

TEST_CASE("reference tet mass") {
  TetMesh m = reference_tet();
  double v = 1.0 / 6.0;
  Mat M = to_dense(assemble_mass_full(m));
  for (int i = 0; i < 4; ++i) {
    CHECK(M(i, i) == doctest::Approx(v / 10.0).epsilon(1e-14));
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(M(i, j) == doctest::Approx(v / 20.0).epsilon(1e-14));
  }
  CHECK(M.sum() == doctest::Approx(v).epsilon(1e-14));
}

TEST_CASE("full mass entries sum to the domain volume") {
  TetMesh mesh = build_structured_cube(3);
  CHECK(to_dense(assemble_mass_full(mesh)).sum() ==
        doctest::Approx(1.0).epsilon(1e-12));
  Mat K = to_dense(assemble_stiffness_full(mesh));
  for (int i = 0; i < K.rows(); ++i)
    CHECK(K.row(i).sum() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("interior matrices are SPD and symmetric") {
  TetMesh mesh = build_structured_cube(3);
  TargetField target = target_smooth();
  FemSystem sys = build_system(mesh, 1e-3, target);
  CHECK(is_symmetric(sys.K, 1e-14));
  CHECK(is_symmetric(sys.M, 1e-14));
  CHECK(is_symmetric(sys.A, 1e-14));
  CHECK_NOTHROW(dense_cholesky_solve(to_dense(sys.K), Vec::Ones(sys.f.size())));
  CHECK_NOTHROW(dense_cholesky_solve(to_dense(sys.M), Vec::Ones(sys.f.size())));
  CHECK_NOTHROW(dense_cholesky_solve(to_dense(sys.A), Vec::Ones(sys.f.size())));
}

TEST_CASE("system matrix is affine in rho") {
  TetMesh mesh = build_structured_cube(3);
  TargetField target = target_smooth();
  FemSystem s1 = build_system(mesh, 0.25, target);
  FemSystem s2 = build_system(mesh, 1.25, target);
  Mat D = to_dense(s2.A) - to_dense(s1.A) - to_dense(s1.K);
  CHECK(D.lpNorm<Eigen::Infinity>() < 1e-13);
  CHECK((to_dense(s1.A) - 0.25 * to_dense(s1.K) - to_dense(s1.M))
            .lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("build_system rejects nonpositive rho") {
  TetMesh mesh = build_structured_cube(2);
  CHECK_THROWS_AS(build_system(mesh, 0.0, target_smooth()),
                  std::invalid_argument);
}

TEST_CASE("load of the zero target vanishes") {
  TetMesh mesh = build_structured_cube(3);
  Vec f = assemble_load(mesh, constant_target(0.0));
  CHECK(f.norm() == 0.0);
}

TEST_CASE("load of a constant target sums incident volumes") {
  TetMesh mesh = build_structured_cube(3);
  DofMap dm = interior_dof_map(mesh);
  Vec f = assemble_load(mesh, constant_target(1.0));
  REQUIRE(f.size() == dm.n_dofs());
  // f_i = sum over tets containing vertex i of V/4.
  std::vector<double> expected(static_cast<size_t>(dm.n_dofs()), 0.0);
  for (int t = 0; t < mesh.n_tets(); ++t) {
    for (int v = 0; v < 4; ++v) {
      int dof = dm.vertex_to_dof[static_cast<size_t>(
          mesh.tets[static_cast<size_t>(t)][static_cast<size_t>(v)])];
      if (dof >= 0) expected[static_cast<size_t>(dof)] += tet_volume(mesh, t) / 4.0;
    }
  }
  for (int i = 0; i < dm.n_dofs(); ++i)
    CHECK(f[i] == doctest::Approx(expected[static_cast<size_t>(i)]).epsilon(1e-13));
}

TEST_CASE("load of a polynomial matches an independent quadrature loop") {
  TetMesh mesh = build_structured_cube(2);
  TargetField t;
  t.evaluator = quadratic;
  t.smoothness_tag = Smoothness::smooth_h2;
  t.quadrature_order_hint = 5;
  Vec f = assemble_load(mesh, t);
  DofMap dm = interior_dof_map(mesh);
  // Independent per-element loop with the same rule: checks adjacency,
  // masking, and physical-point plumbing rather than the rule itself.
  const TetRule& rule = tet_rule_degree5();
  Vec expected = Vec::Zero(dm.n_dofs());
  for (int tt = 0; tt < mesh.n_tets(); ++tt) {
    auto verts = tet_vertices(mesh, tt);
    Mat pts = tet_rule_physical_points(rule, verts);
    double vol = tet_volume(mesh, tt);
    for (int v = 0; v < 4; ++v) {
      int dof = dm.vertex_to_dof[static_cast<size_t>(
          mesh.tets[static_cast<size_t>(tt)][static_cast<size_t>(v)])];
      if (dof < 0) continue;
      double acc = 0.0;
      for (int q = 0; q < rule.size(); ++q)
        acc += rule.weights[q] * quadratic(pts.row(q).transpose()) *
               rule.points(q, v);
      expected[dof] += vol * acc;
    }
  }
  CHECK((f - expected).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("subdomain matrices sum to the global matrix") {
  TetMesh mesh = build_structured_cube(3);
  DofMap dm = interior_dof_map(mesh);
  double rho = 0.04;
  FemSystem sys = build_system(mesh, rho, target_smooth());
  std::vector<int> half1, half2;
  for (int t = 0; t < mesh.n_tets(); ++t)
    (t < mesh.n_tets() / 2 ? half1 : half2).push_back(t);
  std::vector<int> all_dofs(static_cast<size_t>(dm.n_dofs()));
  for (int i = 0; i < dm.n_dofs(); ++i) all_dofs[static_cast<size_t>(i)] = i;
  Mat sum = to_dense(assemble_subdomain_matrix(mesh, dm, rho, half1, all_dofs)) +
            to_dense(assemble_subdomain_matrix(mesh, dm, rho, half2, all_dofs));
  CHECK((sum - to_dense(sys.A)).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("errors vanish for an exactly represented solution") {
  TetMesh mesh = build_structured_cube(3);
  FemSystem sys = build_system(mesh, 1.0, target_smooth());
  Solution zero = make_solution(mesh, sys, Vec::Zero(sys.f.size()));
  CHECK(l2_error(zero, [](const Vec3&) { return 0.0; }) ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK(h1_semi_error(zero, [](const Vec3&) { return Vec3::Zero().eval(); }) ==
        doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("interpolation error decreases at second order") {
  ManufacturedExact ex = manufactured_exact(1.0);
  std::array<double, 2> errs{};
  int k = 0;
  for (int n : {4, 8}) {
    TetMesh mesh = build_structured_cube(n);
    FemSystem sys = build_system(mesh, 1.0, target_smooth());
    Vec c(sys.f.size());
    for (int d = 0; d < sys.dof_map.n_dofs(); ++d)
      c[d] = ex.u(mesh.vertices[static_cast<size_t>(
          sys.dof_map.dof_to_vertex[static_cast<size_t>(d)])]);
    errs[static_cast<size_t>(k++)] = l2_error(make_solution(mesh, sys, c), ex.u);
  }
  double ratio = errs[0] / errs[1];
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("dual norm of a single-dof residual has a closed form") {
  TetMesh mesh = build_structured_cube(2);
  FemSystem sys = build_system(mesh, 1.0, target_smooth());
  REQUIRE(sys.dof_map.n_dofs() == 1);
  double k00 = to_dense(sys.K)(0, 0);
  Vec r(1);
  r << 0.7;
  CHECK(hminus1_norm(sys, r) ==
        doctest::Approx(0.7 / std::sqrt(k00)).epsilon(1e-12));
}

TEST_CASE("dual norm accepts an injected inverse") {
  TetMesh mesh = build_structured_cube(3);
  FemSystem sys = build_system(mesh, 0.5, target_smooth());
  Vec r = oracle::pseudo_random_vec(sys.dof_map.n_dofs(), 23);
  Mat Kd = to_dense(sys.K);
  LinOp kinv = [&Kd](const Vec& b) { return dense_cholesky_solve(Kd, b); };
  CHECK(hminus1_norm_with(sys, r, kinv) ==
        doctest::Approx(hminus1_norm(sys, r)).epsilon(1e-9));
}

TEST_CASE("target residual at zero coefficients is the load") {
  TetMesh mesh = build_structured_cube(3);
  FemSystem sys = build_system(mesh, 1.0, target_smooth());
  Solution zero = make_solution(mesh, sys, Vec::Zero(sys.f.size()));
  CHECK((target_residual(zero) - sys.f).norm() == 0.0);
}

TEST_CASE("nodal field scatters interior coefficients") {
  TetMesh mesh = build_structured_cube(2);
  DofMap dm = interior_dof_map(mesh);
  Vec c(1);
  c << 3.5;
  Vec field = nodal_field(mesh, dm, c);
  REQUIRE(field.size() == mesh.n_vertices());
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (dm.vertex_to_dof[static_cast<size_t>(v)] >= 0)
      CHECK(field[v] == 3.5);
    else
      CHECK(field[v] == 0.0);
  }
}

TEST_CASE("control recovery inverts the optimality relation") {
  TetMesh mesh = build_structured_cube(2);
  double rho = 0.01;
  FemSystem sys = build_system(mesh, rho, target_smooth());
  ManufacturedExact ex = manufactured_exact(rho);
  Vec c(1);
  Vec3 center = mesh.vertices[static_cast<size_t>(
      sys.dof_map.dof_to_vertex[0])];
  c << ex.u(center);
  Solution sol = make_solution(mesh, sys, c);
  Vec z = recover_control(sol, target_smooth());
  double pi2 = std::numbers::pi * std::numbers::pi;
  int cv = sys.dof_map.dof_to_vertex[0];
  CHECK(z[cv] ==
        doctest::Approx(3.0 * pi2 / (3.0 * rho * pi2 + 1.0)).epsilon(1e-11));
  // Boundary vertices carry (target - 0)/rho.
  CHECK(z[0] == doctest::Approx(target_smooth().evaluator(mesh.vertices[0]) /
                                rho).epsilon(1e-12));
}

TEST_CASE("galerkin solution is the A-orthogonal projection") {
  TetMesh mesh = build_structured_cube(3);
  FemSystem sys = build_system(mesh, 0.1, target_smooth());
  Vec u = dense_cholesky_solve(to_dense(sys.A), sys.f);
  // Residual orthogonality against five probe vectors.
  Vec res = sys.f - spmv(sys.A, u);
  for (int s = 0; s < 5; ++s) {
    Vec w = oracle::pseudo_random_vec(sys.dof_map.n_dofs(), 100 + s);
    CHECK(std::abs(res.dot(w)) < 1e-10);
  }
}
