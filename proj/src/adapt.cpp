#include "rd/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rd/amg.hpp"
#include "rd/parallel.hpp"
#include "rd/quadrature.hpp"

namespace rd {

namespace {

constexpr int kFaceOppositeVertex[4][3] = {
    {1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};

struct FaceRef {
  std::array<int, 3> key;
  int tet;
  int local;  // opposite vertex index
};

double longest_edge(const std::array<Vec3, 4>& v) {
  double h = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) h = std::max(h, (v[a] - v[b]).norm());
  return h;
}

}  // namespace

Estimate estimate(const Solution& sol, const TargetField& target) {
  const TetMesh& mesh = *sol.mesh;
  const FemSystem& sys = *sol.system;
  const double rho = sys.rho;
  const double inv_sqrt_rho = 1.0 / std::sqrt(rho);
  const Vec nodal = nodal_field(mesh, sys.dof_map, sol.coefficients);
  const int nt = mesh.n_tets();

  const TetRule& rule = target.smoothness_tag == Smoothness::discontinuous
                            ? tet_rule_subdivision64()
                            : tet_rule_degree5();

  Vec eta_sq(nt);
  std::vector<Vec3> grad(static_cast<size_t>(nt));
  parallel_for(nt, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t t = b; t < e; ++t) {
      const auto verts = tet_vertices(mesh, static_cast<int>(t));
      const auto& tet = mesh.tets[static_cast<size_t>(t)];
      Eigen::Matrix3d J;
      J.col(0) = verts[1] - verts[0];
      J.col(1) = verts[2] - verts[0];
      J.col(2) = verts[3] - verts[0];
      const double vol = std::abs(J.determinant()) / 6.0;
      const Eigen::Matrix3d Jinv = J.inverse();
      Vec3 g = Vec3::Zero();
      Vec3 g0 = Vec3::Zero();
      for (int i = 0; i < 3; ++i) {
        const Vec3 gi = Jinv.row(i).transpose();
        g += nodal[tet[static_cast<size_t>(i + 1)]] * gi;
        g0 -= gi;
      }
      g += nodal[tet[0]] * g0;
      grad[static_cast<size_t>(t)] = g;

      const Mat x = tet_rule_physical_points(rule, verts);
      double acc = 0.0;
      for (int q = 0; q < rule.size(); ++q) {
        double uh = 0.0;
        for (int i = 0; i < 4; ++i)
          uh += rule.points(q, i) * nodal[tet[static_cast<size_t>(i)]];
        const double d = target.evaluator(x.row(q).transpose()) - uh;
        acc += rule.weights(q) * d * d;
      }
      const double a_tau = std::min(longest_edge(verts) * inv_sqrt_rho, 1.0);
      eta_sq[t] = a_tau * a_tau * vol * acc;
    }
  });

  // Interior faces: add the scaled normal-jump term to both neighbors.
  std::vector<FaceRef> faces;
  faces.reserve(static_cast<size_t>(nt) * 4);
  for (int t = 0; t < nt; ++t) {
    const auto& tet = mesh.tets[static_cast<size_t>(t)];
    for (int l = 0; l < 4; ++l) {
      std::array<int, 3> key = {tet[static_cast<size_t>(kFaceOppositeVertex[l][0])],
                                tet[static_cast<size_t>(kFaceOppositeVertex[l][1])],
                                tet[static_cast<size_t>(kFaceOppositeVertex[l][2])]};
      std::sort(key.begin(), key.end());
      faces.push_back({key, t, l});
    }
  }
  std::sort(faces.begin(), faces.end(), [](const FaceRef& a, const FaceRef& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.tet < b.tet;
  });
  for (size_t i = 0; i + 1 < faces.size(); ++i) {
    if (faces[i].key != faces[i + 1].key) continue;
    const FaceRef& fa = faces[i];
    const FaceRef& fb = faces[i + 1];
    const Vec3 v0 = mesh.vertices[static_cast<size_t>(fa.key[0])];
    const Vec3 v1 = mesh.vertices[static_cast<size_t>(fa.key[1])];
    const Vec3 v2 = mesh.vertices[static_cast<size_t>(fa.key[2])];
    const Vec3 cr = (v1 - v0).cross(v2 - v0);
    const double area = 0.5 * cr.norm();
    const Vec3 n = cr.normalized();
    const double jump =
        rho * (grad[static_cast<size_t>(fa.tet)] - grad[static_cast<size_t>(fb.tet)]).dot(n);
    const double h_f = std::max({(v0 - v1).norm(), (v1 - v2).norm(), (v0 - v2).norm()});
    const double a_f = std::min(h_f * inv_sqrt_rho, 1.0);
    const double term = 0.5 * inv_sqrt_rho * a_f * area * jump * jump;
    eta_sq[fa.tet] += term;
    eta_sq[fb.tet] += term;
    ++i;
  }

  Estimate est;
  est.per_tet = eta_sq.cwiseSqrt();
  est.global = std::sqrt(eta_sq.sum());
  return est;
}

std::vector<int> mark_dorfler(const Estimate& est, double theta) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::invalid_argument("mark_dorfler: theta must be in (0, 1]");
  const int nt = static_cast<int>(est.per_tet.size());
  std::vector<int> order(static_cast<size_t>(nt));
  for (int t = 0; t < nt; ++t) order[static_cast<size_t>(t)] = t;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ea = est.per_tet[a], eb = est.per_tet[b];
    if (ea != eb) return ea > eb;
    return a < b;
  });
  // Sum squares in the sorted order so the theta=1 threshold is met exactly
  // once every positive indicator is included.
  double total = 0.0;
  for (int t : order) total += est.per_tet[t] * est.per_tet[t];
  const double goal = theta * theta * total;
  std::vector<int> marked;
  double acc = 0.0;
  for (int t : order) {
    if (acc >= goal || est.per_tet[t] == 0.0) break;
    marked.push_back(t);
    acc += est.per_tet[t] * est.per_tet[t];
  }
  return marked;
}

AdaptResult adaptive_solve(const TetMesh& initial, const TargetField& target,
                           double rho, int dof_budget, const SystemSolver& solver,
                           double theta) {
  AdaptResult out;
  TetMesh mesh = initial;
  int level = 0;
  constexpr int max_levels = 200;
  for (;;) {
    const auto t0 = std::chrono::steady_clock::now();
    FemSystem sys = build_system(mesh, rho, target);
    PcgResult res = solver(mesh, sys);
    const Solution sol = make_solution(mesh, sys, res.x);
    const Estimate est = estimate(sol, target);
    const double l2_sq = l2_error_target_squared(sol, target);
    const Vec r = target_residual(sol);
    double hm1;
    if (sys.dof_map.n_dofs() > 2000) {
      const AmgHierarchy kh = build_amg(sys.K);
      hm1 = hminus1_norm_with(sys, r, [&](const Vec& b) {
        return pcg(sys.K, amg_precond(kh), b, 1e-11, 500).x;
      });
    } else {
      hm1 = hminus1_norm(sys, r);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    AdaptLevel row;
    row.level = level;
    row.dofs = sys.dof_map.n_dofs();
    row.eta = est.global;
    row.err_l2_sq = l2_sq;
    row.err_hm1_sq = hm1 * hm1;
    row.iterations = res.report.iterations;
    row.seconds = seconds;
    out.history.push_back(row);

    if (row.dofs >= dof_budget) {
      out.mesh = std::move(mesh);
      out.coefficients = std::move(res.x);
      return out;
    }
    if (++level > max_levels)
      throw std::runtime_error("adaptive_solve: level cap reached before the dof budget");
    const std::vector<int> marked = mark_dorfler(est, theta);
    TetMesh refined = bisect_marked(mesh, marked);
    const int new_dofs = mesh_stats(refined).n_interior_dofs;
    if (new_dofs == row.dofs)
      throw std::runtime_error("adaptive_solve: refinement stagnated at level " +
                               std::to_string(level - 1) + " (" +
                               std::to_string(new_dofs) + " dofs)");
    mesh = std::move(refined);
  }
}

}  // namespace rd
