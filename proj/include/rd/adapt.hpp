#pragma once

#include <functional>
#include <vector>

#include "rd/assembly.hpp"
#include "rd/mesh.hpp"
#include "rd/target.hpp"

namespace rd {

struct Estimate {
  Vec per_tet;         // eta_tau >= 0
  double global = 0.0;  // sqrt(sum eta_tau^2)
};

// Robust residual indicator: eta_tau^2 = a_tau^2 ||target - u_h||_{L2(tau)}^2
// + 1/2 sum over interior faces of rho^{-1/2} a_F ||[rho dn u_h]||_{L2(F)}^2,
// with a_S = min(h_S rho^{-1/2}, 1).
Estimate estimate(const Solution& sol, const TargetField& target);

// Minimal greedy set carrying theta^2 of the squared global indicator.
std::vector<int> mark_dorfler(const Estimate& est, double theta);

struct AdaptLevel {
  int level = 0;
  int dofs = 0;
  double eta = 0.0;
  double err_l2_sq = 0.0;
  double err_hm1_sq = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

using SystemSolver = std::function<PcgResult(const TetMesh&, const FemSystem&)>;

struct AdaptResult {
  TetMesh mesh;
  Vec coefficients;
  std::vector<AdaptLevel> history;
};

// Solve -> estimate -> mark -> bisect until the interior dof count reaches
// dof_budget. Error norms in the history are measured against the target.
AdaptResult adaptive_solve(const TetMesh& initial, const TargetField& target,
                           double rho, int dof_budget, const SystemSolver& solver,
                           double theta = 0.5);

}  // namespace rd
