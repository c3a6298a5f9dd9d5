#include "rd/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rd/parallel.hpp"
#include "rd/quadrature.hpp"

namespace rd {

namespace {

struct VertexTets {
  std::vector<int> offset;
  std::vector<int> tet;  // ascending per vertex
};

VertexTets build_vertex_tets(const TetMesh& mesh) {
  VertexTets a;
  a.offset.assign(static_cast<size_t>(mesh.n_vertices()) + 1, 0);
  for (const auto& t : mesh.tets)
    for (int v : t) ++a.offset[static_cast<size_t>(v) + 1];
  for (size_t v = 1; v < a.offset.size(); ++v) a.offset[v] += a.offset[v - 1];
  a.tet.resize(static_cast<size_t>(4) * mesh.n_tets());
  std::vector<int> cur(a.offset.begin(), a.offset.end() - 1);
  for (int t = 0; t < mesh.n_tets(); ++t)
    for (int v : mesh.tets[static_cast<size_t>(t)])
      a.tet[static_cast<size_t>(cur[static_cast<size_t>(v)]++)] = t;
  return a;
}

struct LocalGeom {
  double volume;
  Eigen::Matrix<double, 4, 3> grad;  // row i = gradient of barycentric i
};

LocalGeom local_geom(const std::array<Vec3, 4>& v) {
  Eigen::Matrix3d J;
  J.col(0) = v[1] - v[0];
  J.col(1) = v[2] - v[0];
  J.col(2) = v[3] - v[0];
  const double det = J.determinant();
  LocalGeom g;
  g.volume = std::abs(det) / 6.0;
  if (!(g.volume > 0.0)) throw std::runtime_error("assembly: degenerate tet");
  const Eigen::Matrix3d Jinv = J.inverse();
  for (int i = 0; i < 3; ++i) g.grad.row(i + 1) = Jinv.row(i);
  g.grad.row(0) = -(g.grad.row(1) + g.grad.row(2) + g.grad.row(3));
  return g;
}

// Row-wise symmetric assembly of cK*K + cM*M over the rows' vertices.
// Deterministic: each row sums its incident tets in ascending order.
SpMat assemble_matrix(const TetMesh& mesh, const std::vector<int>& row_of_vert,
                      const std::vector<int>& vert_of_row, double cK, double cM,
                      const std::vector<std::uint8_t>* tet_mask) {
  const VertexTets adj = build_vertex_tets(mesh);
  const int n = static_cast<int>(vert_of_row.size());

  std::vector<std::vector<int>> cols(static_cast<size_t>(n));
  parallel_for(n, [&](std::int64_t rb, std::int64_t re) {
    std::vector<int> cand;
    for (std::int64_t r = rb; r < re; ++r) {
      const int v = vert_of_row[static_cast<size_t>(r)];
      cand.clear();
      for (int k = adj.offset[static_cast<size_t>(v)];
           k < adj.offset[static_cast<size_t>(v) + 1]; ++k) {
        const int t = adj.tet[static_cast<size_t>(k)];
        if (tet_mask && !(*tet_mask)[static_cast<size_t>(t)]) continue;
        for (int w : mesh.tets[static_cast<size_t>(t)]) {
          const int c = row_of_vert[static_cast<size_t>(w)];
          if (c >= 0) cand.push_back(c);
        }
      }
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      cols[static_cast<size_t>(r)] = cand;
    }
  });

  std::vector<int> row_ptr(static_cast<size_t>(n) + 1, 0);
  for (int r = 0; r < n; ++r)
    row_ptr[static_cast<size_t>(r) + 1] =
        row_ptr[static_cast<size_t>(r)] + static_cast<int>(cols[static_cast<size_t>(r)].size());
  const int nnz = row_ptr[static_cast<size_t>(n)];

  SpMat A(n, n);
  A.reserve(nnz);
  A.makeCompressed();
  // Fill CSR arrays directly.
  A.resizeNonZeros(nnz);
  int* rp = A.outerIndexPtr();
  int* ci = A.innerIndexPtr();
  double* vals = A.valuePtr();
  std::copy(row_ptr.begin(), row_ptr.end(), rp);
  parallel_for(n, [&](std::int64_t rb, std::int64_t re) {
    for (std::int64_t r = rb; r < re; ++r) {
      const auto& rc = cols[static_cast<size_t>(r)];
      int* ci_r = ci + rp[r];
      double* va_r = vals + rp[r];
      std::copy(rc.begin(), rc.end(), ci_r);
      std::fill(va_r, va_r + rc.size(), 0.0);
      const int v = vert_of_row[static_cast<size_t>(r)];
      for (int k = adj.offset[static_cast<size_t>(v)];
           k < adj.offset[static_cast<size_t>(v) + 1]; ++k) {
        const int t = adj.tet[static_cast<size_t>(k)];
        if (tet_mask && !(*tet_mask)[static_cast<size_t>(t)]) continue;
        const auto& tet = mesh.tets[static_cast<size_t>(t)];
        const LocalGeom g = local_geom(tet_vertices(mesh, t));
        int iv = 0;
        while (tet[static_cast<size_t>(iv)] != v) ++iv;
        for (int jv = 0; jv < 4; ++jv) {
          const int c = row_of_vert[static_cast<size_t>(tet[static_cast<size_t>(jv)])];
          if (c < 0) continue;
          double val = 0.0;
          if (cK != 0.0)
            val += cK * g.volume * g.grad.row(iv).dot(g.grad.row(jv));
          if (cM != 0.0)
            val += cM * g.volume * (iv == jv ? 0.1 : 0.05);
          const auto pos = std::lower_bound(rc.begin(), rc.end(), c) - rc.begin();
          va_r[pos] += val;
        }
      }
    }
  });

  // Drop exact zeros (cancellations and right-angle stiffness couplings).
  A.prune([](int, int, double v) { return v != 0.0; });
  A.makeCompressed();
  return A;
}

std::vector<int> identity_rows(int nv) {
  std::vector<int> r(static_cast<size_t>(nv));
  for (int i = 0; i < nv; ++i) r[static_cast<size_t>(i)] = i;
  return r;
}

const TetRule& rule_for(const TargetField& target) {
  return target.smoothness_tag == Smoothness::discontinuous
             ? tet_rule_subdivision64()
             : tet_rule_degree5();
}

Vec load_vector(const TetMesh& mesh, const DofMap& dof_map,
                const TargetField& target) {
  const VertexTets adj = build_vertex_tets(mesh);
  const TetRule& rule = rule_for(target);
  Vec f(dof_map.n_dofs());
  parallel_for(dof_map.n_dofs(), [&](std::int64_t rb, std::int64_t re) {
    for (std::int64_t r = rb; r < re; ++r) {
      const int v = dof_map.dof_to_vertex[static_cast<size_t>(r)];
      double s = 0.0;
      for (int k = adj.offset[static_cast<size_t>(v)];
           k < adj.offset[static_cast<size_t>(v) + 1]; ++k) {
        const int t = adj.tet[static_cast<size_t>(k)];
        const auto& tet = mesh.tets[static_cast<size_t>(t)];
        int iv = 0;
        while (tet[static_cast<size_t>(iv)] != v) ++iv;
        const auto verts = tet_vertices(mesh, t);
        const double vol = tet_volume(mesh, t);
        const Mat x = tet_rule_physical_points(rule, verts);
        double acc = 0.0;
        for (int q = 0; q < rule.size(); ++q)
          acc += rule.weights(q) * target.evaluator(x.row(q).transpose()) *
                 rule.points(q, iv);
        s += vol * acc;
      }
      f[r] = s;
    }
  });
  return f;
}

double fe_value(const TetMesh& mesh, const Vec& nodal, int t, const TetRule& rule,
                int q) {
  const auto& tet = mesh.tets[static_cast<size_t>(t)];
  double u = 0.0;
  for (int i = 0; i < 4; ++i)
    u += rule.points(q, i) * nodal[tet[static_cast<size_t>(i)]];
  return u;
}

}  // namespace

DofMap interior_dof_map(const TetMesh& mesh) {
  DofMap map;
  map.vertex_to_dof.assign(static_cast<size_t>(mesh.n_vertices()), -1);
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (!mesh.boundary_vertex[static_cast<size_t>(v)]) {
      map.vertex_to_dof[static_cast<size_t>(v)] = map.n_dofs();
      map.dof_to_vertex.push_back(v);
    }
  }
  return map;
}

SpMat assemble_stiffness(const TetMesh& mesh) {
  const DofMap map = interior_dof_map(mesh);
  return assemble_matrix(mesh, map.vertex_to_dof, map.dof_to_vertex, 1.0, 0.0,
                         nullptr);
}

SpMat assemble_mass(const TetMesh& mesh) {
  const DofMap map = interior_dof_map(mesh);
  return assemble_matrix(mesh, map.vertex_to_dof, map.dof_to_vertex, 0.0, 1.0,
                         nullptr);
}

SpMat assemble_stiffness_full(const TetMesh& mesh) {
  const auto rows = identity_rows(mesh.n_vertices());
  return assemble_matrix(mesh, rows, rows, 1.0, 0.0, nullptr);
}

SpMat assemble_mass_full(const TetMesh& mesh) {
  const auto rows = identity_rows(mesh.n_vertices());
  return assemble_matrix(mesh, rows, rows, 0.0, 1.0, nullptr);
}

Vec assemble_load(const TetMesh& mesh, const TargetField& target) {
  return load_vector(mesh, interior_dof_map(mesh), target);
}

FemSystem build_system(const TetMesh& mesh, double rho, const TargetField& target) {
  if (!(rho > 0.0)) throw std::invalid_argument("build_system: rho must be > 0");
  FemSystem sys;
  sys.rho = rho;
  sys.dof_map = interior_dof_map(mesh);
  sys.K = assemble_matrix(mesh, sys.dof_map.vertex_to_dof, sys.dof_map.dof_to_vertex,
                          1.0, 0.0, nullptr);
  sys.M = assemble_matrix(mesh, sys.dof_map.vertex_to_dof, sys.dof_map.dof_to_vertex,
                          0.0, 1.0, nullptr);
  sys.A = SpMat(rho * sys.K + sys.M);
  sys.A.makeCompressed();
  sys.f = load_vector(mesh, sys.dof_map, target);
  return sys;
}

Solution make_solution(const TetMesh& mesh, const FemSystem& sys, Vec coefficients) {
  if (coefficients.size() != sys.dof_map.n_dofs())
    throw std::invalid_argument("make_solution: coefficient length mismatch");
  Solution s;
  s.coefficients = std::move(coefficients);
  s.system = &sys;
  s.mesh = &mesh;
  return s;
}

SpMat assemble_subdomain_matrix(const TetMesh& mesh, const DofMap& dof_map,
                                double rho, const std::vector<int>& tets,
                                const std::vector<int>& dofs) {
  std::vector<std::uint8_t> mask(static_cast<size_t>(mesh.n_tets()), 0);
  for (int t : tets) mask[static_cast<size_t>(t)] = 1;
  std::vector<int> row_of_vert(static_cast<size_t>(mesh.n_vertices()), -1);
  std::vector<int> vert_of_row(dofs.size());
  for (size_t i = 0; i < dofs.size(); ++i) {
    const int v = dof_map.dof_to_vertex[static_cast<size_t>(dofs[i])];
    row_of_vert[static_cast<size_t>(v)] = static_cast<int>(i);
    vert_of_row[i] = v;
  }
  return assemble_matrix(mesh, row_of_vert, vert_of_row, rho, 1.0, &mask);
}

double l2_error(const Solution& sol, const std::function<double(const Vec3&)>& exact) {
  const TetMesh& mesh = *sol.mesh;
  const Vec nodal = nodal_field(mesh, sol.system->dof_map, sol.coefficients);
  const TetRule& rule = tet_rule_degree5();
  const double err2 = parallel_reduce(mesh.n_tets(), [&](std::int64_t b, std::int64_t e) {
    double s = 0.0;
    for (std::int64_t t = b; t < e; ++t) {
      const auto verts = tet_vertices(mesh, static_cast<int>(t));
      const Mat x = tet_rule_physical_points(rule, verts);
      double acc = 0.0;
      for (int q = 0; q < rule.size(); ++q) {
        const double d = fe_value(mesh, nodal, static_cast<int>(t), rule, q) -
                         exact(x.row(q).transpose());
        acc += rule.weights(q) * d * d;
      }
      s += tet_volume(mesh, static_cast<int>(t)) * acc;
    }
    return s;
  });
  return std::sqrt(err2);
}

double h1_semi_error(const Solution& sol,
                     const std::function<Vec3(const Vec3&)>& exact_grad) {
  const TetMesh& mesh = *sol.mesh;
  const Vec nodal = nodal_field(mesh, sol.system->dof_map, sol.coefficients);
  const TetRule& rule = tet_rule_degree5();
  const double err2 = parallel_reduce(mesh.n_tets(), [&](std::int64_t b, std::int64_t e) {
    double s = 0.0;
    for (std::int64_t t = b; t < e; ++t) {
      const auto verts = tet_vertices(mesh, static_cast<int>(t));
      const LocalGeom g = local_geom(verts);
      const auto& tet = mesh.tets[static_cast<size_t>(t)];
      Vec3 gu = Vec3::Zero();
      for (int i = 0; i < 4; ++i)
        gu += nodal[tet[static_cast<size_t>(i)]] * g.grad.row(i).transpose();
      const Mat x = tet_rule_physical_points(rule, verts);
      double acc = 0.0;
      for (int q = 0; q < rule.size(); ++q)
        acc += rule.weights(q) * (gu - exact_grad(x.row(q).transpose())).squaredNorm();
      s += g.volume * acc;
    }
    return s;
  });
  return std::sqrt(err2);
}

double l2_error_target_squared(const Solution& sol, const TargetField& target) {
  const TetMesh& mesh = *sol.mesh;
  const Vec nodal = nodal_field(mesh, sol.system->dof_map, sol.coefficients);
  const TetRule& rule = rule_for(target);
  return parallel_reduce(mesh.n_tets(), [&](std::int64_t b, std::int64_t e) {
    double s = 0.0;
    for (std::int64_t t = b; t < e; ++t) {
      const auto verts = tet_vertices(mesh, static_cast<int>(t));
      const Mat x = tet_rule_physical_points(rule, verts);
      double acc = 0.0;
      for (int q = 0; q < rule.size(); ++q) {
        const double d = target.evaluator(x.row(q).transpose()) -
                         fe_value(mesh, nodal, static_cast<int>(t), rule, q);
        acc += rule.weights(q) * d * d;
      }
      s += tet_volume(mesh, static_cast<int>(t)) * acc;
    }
    return s;
  });
}

double hminus1_norm_with(const FemSystem& sys, const Vec& r, const LinOp& K_inv) {
  if (r.size() != sys.K.rows())
    throw std::invalid_argument("hminus1_norm: dimension mismatch");
  const Vec w = K_inv(r);
  const double rw = r.dot(w);
  if (rw < 0.0) throw std::runtime_error("hminus1_norm: negative dual pairing");
  return std::sqrt(rw);
}

double hminus1_norm(const FemSystem& sys, const Vec& r) {
  const int n = static_cast<int>(sys.K.rows());
  if (n <= 2000) {
    return hminus1_norm_with(sys, r, [&](const Vec& b) {
      return dense_cholesky_solve(to_dense(sys.K), b);
    });
  }
  return hminus1_norm_with(sys, r, [&](const Vec& b) {
    return pcg(sys.K, jacobi_precond(sys.K), b, 1e-12, 20000).x;
  });
}

Vec target_residual(const Solution& sol) {
  return sol.system->f - spmv(sol.system->M, sol.coefficients);
}

Vec nodal_field(const TetMesh& mesh, const DofMap& dof_map, const Vec& coefficients) {
  Vec nodal = Vec::Zero(mesh.n_vertices());
  for (int d = 0; d < dof_map.n_dofs(); ++d)
    nodal[dof_map.dof_to_vertex[static_cast<size_t>(d)]] = coefficients[d];
  return nodal;
}

Vec recover_control(const Solution& sol, const TargetField& target) {
  const TetMesh& mesh = *sol.mesh;
  const double rho = sol.system->rho;
  if (!(rho > 0.0)) throw std::invalid_argument("recover_control: rho must be > 0");
  const Vec nodal = nodal_field(mesh, sol.system->dof_map, sol.coefficients);
  Vec z(mesh.n_vertices());
  for (int v = 0; v < mesh.n_vertices(); ++v)
    z[v] = (target.evaluator(mesh.vertices[static_cast<size_t>(v)]) - nodal[v]) / rho;
  return z;
}

}  // namespace rd
