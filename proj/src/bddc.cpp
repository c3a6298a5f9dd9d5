#include "rd/bddc.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rd/parallel.hpp"

namespace rd {

namespace {

SpMat extract_submatrix(const SpMat& A, const std::vector<int>& rows,
                        const std::vector<int>& col_index, int ncols) {
  std::vector<Triplet> trips;
  const int* rp = A.outerIndexPtr();
  const int* ci = A.innerIndexPtr();
  const double* va = A.valuePtr();
  for (size_t r = 0; r < rows.size(); ++r) {
    const int i = rows[r];
    for (int k = rp[i]; k < rp[i + 1]; ++k) {
      const int c = col_index[static_cast<size_t>(ci[k])];
      if (c >= 0) trips.emplace_back(static_cast<int>(r), c, va[k]);
    }
  }
  return from_triplets(static_cast<int>(rows.size()), ncols, trips);
}

Vec gather(const Vec& x, const std::vector<int>& idx) {
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[idx[k]];
  return out;
}

int local_boundary_index(const BddcSubdomain& sd, int dof) {
  const auto it = std::lower_bound(sd.boundary.begin(), sd.boundary.end(), dof);
  return static_cast<int>(it - sd.boundary.begin());
}

}  // namespace

Partition partition_geometric(const TetMesh& mesh, const DofMap& dof_map, int p) {
  if (p < 2) throw std::invalid_argument("partition_geometric: p must be >= 2");
  if (p > mesh.n_tets())
    throw std::invalid_argument("partition_geometric: more subdomains than tets");
  const int nt = mesh.n_tets();
  std::vector<Vec3> centroid(static_cast<size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    const auto v = tet_vertices(mesh, t);
    centroid[static_cast<size_t>(t)] = 0.25 * (v[0] + v[1] + v[2] + v[3]);
  }
  Partition part;
  part.p = p;
  part.owner.assign(static_cast<size_t>(nt), -1);

  std::function<void(std::vector<int>&, int, int)> rcb = [&](std::vector<int>& ids,
                                                             int parts, int label) {
    if (parts == 1) {
      for (int t : ids) part.owner[static_cast<size_t>(t)] = label;
      return;
    }
    Vec3 lo = centroid[static_cast<size_t>(ids.front())];
    Vec3 hi = lo;
    for (int t : ids) {
      lo = lo.cwiseMin(centroid[static_cast<size_t>(t)]);
      hi = hi.cwiseMax(centroid[static_cast<size_t>(t)]);
    }
    int axis = 0;
    double ext = hi[0] - lo[0];
    for (int a = 1; a < 3; ++a)
      if (hi[a] - lo[a] > ext) {
        ext = hi[a] - lo[a];
        axis = a;
      }
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
      const double ca = centroid[static_cast<size_t>(a)][axis];
      const double cb = centroid[static_cast<size_t>(b)][axis];
      if (ca != cb) return ca < cb;
      return a < b;
    });
    const int p1 = parts / 2;
    const auto n1 = static_cast<std::int64_t>(ids.size()) * p1 / parts;
    std::vector<int> left(ids.begin(), ids.begin() + n1);
    std::vector<int> right(ids.begin() + n1, ids.end());
    rcb(left, p1, label);
    rcb(right, parts - p1, label + p1);
  };
  std::vector<int> all(static_cast<size_t>(nt));
  std::iota(all.begin(), all.end(), 0);
  rcb(all, p, 0);

  part.dof_subdomains.assign(static_cast<size_t>(dof_map.n_dofs()), {});
  for (int t = 0; t < nt; ++t)
    for (int v : mesh.tets[static_cast<size_t>(t)]) {
      const int d = dof_map.vertex_to_dof[static_cast<size_t>(v)];
      if (d >= 0)
        part.dof_subdomains[static_cast<size_t>(d)].push_back(
            part.owner[static_cast<size_t>(t)]);
    }
  part.is_interface.assign(static_cast<size_t>(dof_map.n_dofs()), 0);
  for (int d = 0; d < dof_map.n_dofs(); ++d) {
    auto& s = part.dof_subdomains[static_cast<size_t>(d)];
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    part.is_interface[static_cast<size_t>(d)] = s.size() >= 2 ? 1 : 0;
  }
  return part;
}

BddcOperator build_bddc(const TetMesh& mesh, const FemSystem& sys,
                        const Partition& partition) {
  BddcOperator op;
  op.partition = partition;
  const int n_dofs = sys.dof_map.n_dofs();
  const int p = partition.p;

  op.interface_index.assign(static_cast<size_t>(n_dofs), -1);
  for (int d = 0; d < n_dofs; ++d)
    if (partition.is_interface[static_cast<size_t>(d)]) {
      op.interface_index[static_cast<size_t>(d)] =
          static_cast<int>(op.interface_dofs.size());
      op.interface_dofs.push_back(d);
    }
  const int nC = static_cast<int>(op.interface_dofs.size());
  op.A_CC = extract_submatrix(sys.A, op.interface_dofs, op.interface_index, nC);

  // Corners: interface dofs shared by 3+ subdomains, or by 2 while touching
  // the Dirichlet boundary through a mesh edge.
  std::vector<std::uint8_t> near_boundary(static_cast<size_t>(n_dofs), 0);
  constexpr int edges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (const auto& tet : mesh.tets)
    for (const auto& e : edges) {
      const int a = tet[static_cast<size_t>(e[0])];
      const int b = tet[static_cast<size_t>(e[1])];
      if (mesh.boundary_vertex[static_cast<size_t>(a)] !=
          mesh.boundary_vertex[static_cast<size_t>(b)]) {
        const int interior_v = mesh.boundary_vertex[static_cast<size_t>(a)] ? b : a;
        const int d = sys.dof_map.vertex_to_dof[static_cast<size_t>(interior_v)];
        near_boundary[static_cast<size_t>(d)] = 1;
      }
    }
  std::vector<std::uint8_t> is_corner(static_cast<size_t>(n_dofs), 0);
  for (int d : op.interface_dofs) {
    const size_t mult = partition.dof_subdomains[static_cast<size_t>(d)].size();
    is_corner[static_cast<size_t>(d)] =
        (mult >= 3 || (mult >= 2 && near_boundary[static_cast<size_t>(d)])) ? 1 : 0;
  }

  // One average constraint per class of non-corner interface dofs sharing
  // the same subdomain set.
  std::map<std::vector<int>, int> class_of_key;
  std::vector<std::vector<int>> class_dofs;
  std::vector<std::vector<int>> class_key;
  for (int d : op.interface_dofs) {
    if (is_corner[static_cast<size_t>(d)]) continue;
    const auto& key = partition.dof_subdomains[static_cast<size_t>(d)];
    auto it = class_of_key.find(key);
    if (it == class_of_key.end()) {
      it = class_of_key.emplace(key, static_cast<int>(class_dofs.size())).first;
      class_dofs.emplace_back();
      class_key.push_back(key);
    }
    class_dofs[static_cast<size_t>(it->second)].push_back(d);
  }

  std::vector<int> corner_primal(static_cast<size_t>(n_dofs), -1);
  int np = 0;
  for (int d : op.interface_dofs)
    if (is_corner[static_cast<size_t>(d)]) corner_primal[static_cast<size_t>(d)] = np++;
  const int first_class_primal = np;
  np += static_cast<int>(class_dofs.size());
  op.n_primal = np;

  std::vector<std::vector<int>> sub_classes(static_cast<size_t>(p));
  for (size_t c = 0; c < class_key.size(); ++c)
    for (int s : class_key[c]) sub_classes[static_cast<size_t>(s)].push_back(static_cast<int>(c));

  op.subs.resize(static_cast<size_t>(p));
  for (int t = 0; t < mesh.n_tets(); ++t)
    op.subs[static_cast<size_t>(partition.owner[static_cast<size_t>(t)])].tets.push_back(t);
  for (int d = 0; d < n_dofs; ++d) {
    const auto& ss = partition.dof_subdomains[static_cast<size_t>(d)];
    if (ss.size() == 1)
      op.subs[static_cast<size_t>(ss[0])].interior.push_back(d);
    else
      for (int s : ss) op.subs[static_cast<size_t>(s)].boundary.push_back(d);
  }

  parallel_for(p, [&](std::int64_t sb, std::int64_t se) {
    for (std::int64_t si = sb; si < se; ++si) {
      const int s = static_cast<int>(si);
      BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
      const int nI = static_cast<int>(sd.interior.size());
      const int nB = static_cast<int>(sd.boundary.size());
      sd.boundary_index.resize(static_cast<size_t>(nB));
      sd.scaling.resize(nB);
      for (int k = 0; k < nB; ++k) {
        const int d = sd.boundary[static_cast<size_t>(k)];
        sd.boundary_index[static_cast<size_t>(k)] =
            op.interface_index[static_cast<size_t>(d)];
        sd.scaling[k] =
            1.0 / static_cast<double>(partition.dof_subdomains[static_cast<size_t>(d)].size());
      }

      std::vector<int> dofs = sd.interior;
      dofs.insert(dofs.end(), sd.boundary.begin(), sd.boundary.end());
      const SpMat Asub =
          assemble_subdomain_matrix(mesh, sys.dof_map, sys.rho, sd.tets, dofs);

      std::vector<Triplet> tII, tIB, tBI;
      Mat BB = Mat::Zero(nB, nB);
      const int* rp = Asub.outerIndexPtr();
      const int* ci = Asub.innerIndexPtr();
      const double* va = Asub.valuePtr();
      for (int r = 0; r < nI + nB; ++r)
        for (int k = rp[r]; k < rp[r + 1]; ++k) {
          const int c = ci[k];
          if (r < nI && c < nI)
            tII.emplace_back(r, c, va[k]);
          else if (r < nI)
            tIB.emplace_back(r, c - nI, va[k]);
          else if (c < nI)
            tBI.emplace_back(r - nI, c, va[k]);
          else
            BB(r - nI, c - nI) = va[k];
        }
      sd.A_IB = from_triplets(nI, nB, tIB);
      sd.A_BI = from_triplets(nB, nI, tBI);
      sd.interior_llt = std::make_unique<Eigen::SimplicialLLT<SpMatCol>>();
      Mat X(nI, nB);
      if (nI > 0) {
        SpMatCol A_II(nI, nI);
        A_II.setFromTriplets(tII.begin(), tII.end());
        sd.interior_llt->compute(A_II);
        if (sd.interior_llt->info() != Eigen::Success)
          throw std::runtime_error("build_bddc: interior factorization failed in subdomain " +
                                   std::to_string(s));
        X = sd.interior_llt->solve(to_dense(sd.A_IB));
      }
      const Mat S = BB - to_dense(sd.A_BI) * X;
      sd.S = 0.5 * (S + S.transpose());

      // Constraint rows: local corners then face classes, ascending.
      std::vector<int> local_corners;
      for (int d : sd.boundary)
        if (is_corner[static_cast<size_t>(d)]) local_corners.push_back(d);
      const auto& cls = sub_classes[static_cast<size_t>(s)];
      const int n_con = static_cast<int>(local_corners.size() + cls.size());
      sd.C = Mat::Zero(n_con, nB);
      sd.primal_index.clear();
      int row = 0;
      for (int d : local_corners) {
        sd.C(row, local_boundary_index(sd, d)) = 1.0;
        sd.primal_index.push_back(corner_primal[static_cast<size_t>(d)]);
        ++row;
      }
      for (int c : cls) {
        const auto& members = class_dofs[static_cast<size_t>(c)];
        const double w = 1.0 / static_cast<double>(members.size());
        for (int d : members) sd.C(row, local_boundary_index(sd, d)) = w;
        sd.primal_index.push_back(first_class_primal + c);
        ++row;
      }
      if (n_con > 0) {
        Eigen::FullPivLU<Mat> lu(sd.C);
        if (lu.rank() < n_con)
          throw std::runtime_error("build_bddc: rank-deficient constraints in subdomain " +
                                   std::to_string(s));
      }

      const int m = nB + n_con;
      if (m > 0) {
        Mat saddle = Mat::Zero(m, m);
        saddle.topLeftCorner(nB, nB) = sd.S;
        saddle.topRightCorner(nB, n_con) = sd.C.transpose();
        saddle.bottomLeftCorner(n_con, nB) = sd.C;
        sd.saddle_lu.compute(saddle);
        Mat rhs = Mat::Zero(m, n_con);
        rhs.bottomRows(n_con) = Mat::Identity(n_con, n_con);
        const Mat sol = sd.saddle_lu.solve(rhs);
        sd.Phi = sol.topRows(nB);
      } else {
        sd.Phi = Mat::Zero(0, 0);
      }
    }
  });

  op.coarse_matrix = Mat::Zero(np, np);
  for (const auto& sd : op.subs) {
    if (sd.primal_index.empty()) continue;
    const Mat Q = sd.Phi.transpose() * sd.S * sd.Phi;
    for (size_t r = 0; r < sd.primal_index.size(); ++r)
      for (size_t c = 0; c < sd.primal_index.size(); ++c)
        op.coarse_matrix(sd.primal_index[r], sd.primal_index[c]) +=
            Q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  if (np > 0) {
    op.coarse_llt.compute(op.coarse_matrix);
    if (op.coarse_llt.info() != Eigen::Success)
      throw std::runtime_error("build_bddc: coarse matrix not positive definite");
  }
  return op;
}

Vec schur_apply(const BddcOperator& op, const Vec& x) {
  if (x.size() != static_cast<Eigen::Index>(op.interface_dofs.size()))
    throw std::invalid_argument("schur_apply: dimension mismatch");
  Vec y = spmv(op.A_CC, x);
  const int p = static_cast<int>(op.subs.size());
  std::vector<Vec> contrib(static_cast<size_t>(p));
  parallel_for(p, [&](std::int64_t sb, std::int64_t se) {
    for (std::int64_t s = sb; s < se; ++s) {
      const BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
      if (sd.boundary.empty() || sd.interior.empty()) continue;
      const Vec xb = gather(x, sd.boundary_index);
      const Vec w = sd.interior_llt->solve(spmv(sd.A_IB, xb));
      contrib[static_cast<size_t>(s)] = spmv(sd.A_BI, w);
    }
  });
  for (int s = 0; s < p; ++s) {
    const BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
    const Vec& c = contrib[static_cast<size_t>(s)];
    for (int k = 0; k < c.size(); ++k) y[sd.boundary_index[static_cast<size_t>(k)]] -= c[k];
  }
  return y;
}

Vec reduce_rhs(const BddcOperator& op, const Vec& f) {
  Vec g = gather(f, op.interface_dofs);
  const int p = static_cast<int>(op.subs.size());
  std::vector<Vec> contrib(static_cast<size_t>(p));
  parallel_for(p, [&](std::int64_t sb, std::int64_t se) {
    for (std::int64_t s = sb; s < se; ++s) {
      const BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
      if (sd.boundary.empty() || sd.interior.empty()) continue;
      const Vec w = sd.interior_llt->solve(gather(f, sd.interior));
      contrib[static_cast<size_t>(s)] = spmv(sd.A_BI, w);
    }
  });
  for (int s = 0; s < p; ++s) {
    const BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
    const Vec& c = contrib[static_cast<size_t>(s)];
    for (int k = 0; k < c.size(); ++k) g[sd.boundary_index[static_cast<size_t>(k)]] -= c[k];
  }
  return g;
}

Vec expand_solution(const BddcOperator& op, const Vec& u_C, const Vec& f) {
  Vec u = Vec::Zero(f.size());
  for (size_t k = 0; k < op.interface_dofs.size(); ++k)
    u[op.interface_dofs[k]] = u_C[static_cast<Eigen::Index>(k)];
  const int p = static_cast<int>(op.subs.size());
  std::vector<Vec> interior_vals(static_cast<size_t>(p));
  parallel_for(p, [&](std::int64_t sb, std::int64_t se) {
    for (std::int64_t s = sb; s < se; ++s) {
      const BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
      if (sd.interior.empty()) continue;
      Vec rhs = gather(f, sd.interior);
      if (!sd.boundary.empty()) rhs -= spmv(sd.A_IB, gather(u_C, sd.boundary_index));
      interior_vals[static_cast<size_t>(s)] = sd.interior_llt->solve(rhs);
    }
  });
  for (int s = 0; s < p; ++s) {
    const BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
    const Vec& w = interior_vals[static_cast<size_t>(s)];
    for (size_t k = 0; k < sd.interior.size(); ++k)
      u[sd.interior[k]] = w[static_cast<Eigen::Index>(k)];
  }
  return u;
}

Vec bddc_apply(const BddcOperator& op, const Vec& r) {
  const int nC = static_cast<int>(op.interface_dofs.size());
  if (r.size() != nC) throw std::invalid_argument("bddc_apply: dimension mismatch");
  const int p = static_cast<int>(op.subs.size());
  std::vector<Vec> local_corr(static_cast<size_t>(p));
  std::vector<Vec> local_primal(static_cast<size_t>(p));
  parallel_for(p, [&](std::int64_t sb, std::int64_t se) {
    for (std::int64_t s = sb; s < se; ++s) {
      const BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
      const int nB = static_cast<int>(sd.boundary.size());
      if (nB == 0) continue;
      const Vec rb = sd.scaling.cwiseProduct(gather(r, sd.boundary_index));
      const int n_con = static_cast<int>(sd.primal_index.size());
      Vec rhs = Vec::Zero(nB + n_con);
      rhs.head(nB) = rb;
      const Vec sol = sd.saddle_lu.solve(rhs);
      local_corr[static_cast<size_t>(s)] = sol.head(nB);
      if (n_con > 0) local_primal[static_cast<size_t>(s)] = sd.Phi.transpose() * rb;
    }
  });

  Vec z = Vec::Zero(nC);
  Vec r_primal = Vec::Zero(op.n_primal);
  for (int s = 0; s < p; ++s) {
    const BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
    if (sd.boundary.empty()) continue;
    const Vec zi = sd.scaling.cwiseProduct(local_corr[static_cast<size_t>(s)]);
    for (size_t k = 0; k < sd.boundary.size(); ++k)
      z[sd.boundary_index[k]] += zi[static_cast<Eigen::Index>(k)];
    for (size_t c = 0; c < sd.primal_index.size(); ++c)
      r_primal[sd.primal_index[c]] += local_primal[static_cast<size_t>(s)][static_cast<Eigen::Index>(c)];
  }

  if (op.n_primal > 0) {
    const Vec lambda = op.coarse_llt.solve(r_primal);
    std::vector<Vec> coarse_corr(static_cast<size_t>(p));
    parallel_for(p, [&](std::int64_t sb, std::int64_t se) {
      for (std::int64_t s = sb; s < se; ++s) {
        const BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
        if (sd.primal_index.empty()) continue;
        Vec lam(static_cast<Eigen::Index>(sd.primal_index.size()));
        for (size_t c = 0; c < sd.primal_index.size(); ++c)
          lam[static_cast<Eigen::Index>(c)] = lambda[sd.primal_index[c]];
        coarse_corr[static_cast<size_t>(s)] = sd.scaling.cwiseProduct(Vec(sd.Phi * lam));
      }
    });
    for (int s = 0; s < p; ++s) {
      const BddcSubdomain& sd = op.subs[static_cast<size_t>(s)];
      if (sd.primal_index.empty()) continue;
      const Vec& w = coarse_corr[static_cast<size_t>(s)];
      for (size_t k = 0; k < sd.boundary.size(); ++k)
        z[sd.boundary_index[k]] += w[static_cast<Eigen::Index>(k)];
    }
  }
  return z;
}

LinOp schur_op(const BddcOperator& op) {
  return [&op](const Vec& x) { return schur_apply(op, x); };
}

LinOp bddc_precond(const BddcOperator& op) {
  return [&op](const Vec& r) { return bddc_apply(op, r); };
}

const Mat& coarse_basis(const BddcOperator& op, int sub) {
  return op.subs.at(static_cast<size_t>(sub)).Phi;
}

BddcSolveResult bddc_solve(const TetMesh& mesh, const FemSystem& sys, int p,
                           double tol, int max_iter) {
  const Partition part = partition_geometric(mesh, sys.dof_map, p);
  const BddcOperator op = build_bddc(mesh, sys, part);
  const Vec g = reduce_rhs(op, sys.f);
  PcgResult res = pcg(schur_op(op), bddc_precond(op), g, tol, max_iter);
  BddcSolveResult out;
  out.u = expand_solution(op, res.x, sys.f);
  out.report = std::move(res.report);
  return out;
}

}  // namespace rd
