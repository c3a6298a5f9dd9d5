#include "rd/amg.hpp"

#include <stdexcept>

namespace rd {

std::pair<std::vector<std::uint8_t>, SpMat> coarsen_redblack(const SpMat& A) {
  const int n = static_cast<int>(A.rows());
  const int* rp = A.outerIndexPtr();
  const int* ci = A.innerIndexPtr();
  enum : std::uint8_t { unmarked = 0, coarse = 1, fine = 2 };
  std::vector<std::uint8_t> state(static_cast<size_t>(n), unmarked);
  for (int i = 0; i < n; ++i) {
    if (state[static_cast<size_t>(i)] != unmarked) continue;
    state[static_cast<size_t>(i)] = coarse;
    for (int k = rp[i]; k < rp[i + 1]; ++k) {
      const int j = ci[k];
      if (j != i && state[static_cast<size_t>(j)] == unmarked)
        state[static_cast<size_t>(j)] = fine;
    }
  }
  // Guard: a fine dof without any coarse neighbor is promoted.
  for (int i = 0; i < n; ++i) {
    if (state[static_cast<size_t>(i)] != fine) continue;
    bool has_coarse = false;
    for (int k = rp[i]; k < rp[i + 1] && !has_coarse; ++k)
      has_coarse = ci[k] != i && state[static_cast<size_t>(ci[k])] == coarse;
    if (!has_coarse) state[static_cast<size_t>(i)] = coarse;
  }

  std::vector<int> coarse_index(static_cast<size_t>(n), -1);
  int nc = 0;
  for (int i = 0; i < n; ++i)
    if (state[static_cast<size_t>(i)] == coarse) coarse_index[static_cast<size_t>(i)] = nc++;

  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(n) * 2);
  for (int i = 0; i < n; ++i) {
    if (state[static_cast<size_t>(i)] == coarse) {
      trips.emplace_back(i, coarse_index[static_cast<size_t>(i)], 1.0);
      continue;
    }
    int count = 0;
    for (int k = rp[i]; k < rp[i + 1]; ++k)
      if (ci[k] != i && state[static_cast<size_t>(ci[k])] == coarse) ++count;
    const double w = 1.0 / count;
    for (int k = rp[i]; k < rp[i + 1]; ++k)
      if (ci[k] != i && state[static_cast<size_t>(ci[k])] == coarse)
        trips.emplace_back(i, coarse_index[static_cast<size_t>(ci[k])], w);
  }
  SpMat P = from_triplets(n, nc, trips);
  std::vector<std::uint8_t> flags(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    flags[static_cast<size_t>(i)] = state[static_cast<size_t>(i)] == coarse ? 1 : 0;
  return {std::move(flags), std::move(P)};
}

SpMat galerkin_coarse(const SpMat& A, const SpMat& P) {
  if (A.cols() != P.rows()) throw std::invalid_argument("galerkin_coarse: dims");
  SpMat AP = A * P;
  SpMat Ac = SpMat(P.transpose()) * AP;
  Ac.prune([](int, int, double v) { return v != 0.0; });
  Ac.makeCompressed();
  return Ac;
}

Vec sgs_sweep(const SpMat& A, const Vec& f, const Vec& u) {
  const int n = static_cast<int>(A.rows());
  const int* rp = A.outerIndexPtr();
  const int* ci = A.innerIndexPtr();
  const double* va = A.valuePtr();
  Vec x = u;
  auto relax = [&](int i) {
    double s = f[i];
    double d = 0.0;
    for (int k = rp[i]; k < rp[i + 1]; ++k) {
      if (ci[k] == i)
        d = va[k];
      else
        s -= va[k] * x[ci[k]];
    }
    if (d == 0.0) throw std::runtime_error("sgs_sweep: zero diagonal");
    x[i] = s / d;
  };
  for (int i = 0; i < n; ++i) relax(i);
  for (int i = n - 1; i >= 0; --i) relax(i);
  return x;
}

AmgHierarchy build_amg(const SpMat& A, int coarsest_threshold, int smoothing_steps) {
  AmgHierarchy h;
  h.smoothing_steps = smoothing_steps;
  SpMat current = A;
  while (current.rows() > coarsest_threshold) {
    AmgLevel level;
    level.A = current;
    auto [flags, P] = coarsen_redblack(level.A);
    if (P.cols() >= P.rows()) {
      // No reduction possible (fully independent graph): stop here.
      break;
    }
    level.coarse_flag = std::move(flags);
    level.P = P;
    level.Pt = SpMat(P.transpose());
    current = galerkin_coarse(level.A, level.P);
    h.levels.push_back(std::move(level));
  }
  AmgLevel last;
  last.A = current;
  h.levels.push_back(std::move(last));
  if (current.rows() > 0) {
    h.coarsest_factorization.compute(to_dense(current));
    if (h.coarsest_factorization.info() != Eigen::Success)
      throw std::runtime_error("build_amg: coarsest level not positive definite");
  }
  return h;
}

namespace {

Vec vcycle(const AmgHierarchy& h, size_t level, const Vec& r) {
  const AmgLevel& lv = h.levels[level];
  if (level + 1 == h.levels.size()) return h.coarsest_factorization.solve(r);
  Vec z = Vec::Zero(r.size());
  for (int s = 0; s < h.smoothing_steps; ++s) z = sgs_sweep(lv.A, r, z);
  const Vec res = r - spmv(lv.A, z);
  const Vec rc = spmv(lv.Pt, res);
  const Vec zc = vcycle(h, level + 1, rc);
  z += spmv(lv.P, zc);
  for (int s = 0; s < h.smoothing_steps; ++s) z = sgs_sweep(lv.A, r, z);
  return z;
}

}  // namespace

Vec amg_apply(const AmgHierarchy& h, const Vec& r) {
  if (h.levels.empty() || r.size() != h.levels.front().A.rows())
    throw std::invalid_argument("amg_apply: dimension mismatch");
  if (r.size() == 0) return r;
  return vcycle(h, 0, r);
}

LinOp amg_precond(const AmgHierarchy& h) {
  return [&h](const Vec& r) { return amg_apply(h, r); };
}

}  // namespace rd
