#pragma once

#include <functional>

#include "rd/types.hpp"

namespace rd {

enum class Smoothness { smooth_h2, discontinuous, smooth_nonzero_bc };

// Desired state on [0,1]^3. The smoothness tag steers load/error quadrature.
struct TargetField {
  std::function<double(const Vec3&)> evaluator;
  Smoothness smoothness_tag = Smoothness::smooth_h2;
  int quadrature_order_hint = 5;
};

// sin(pi x) sin(pi y) sin(pi z)
TargetField target_smooth();
// indicator of the open box (0.25, 0.75)^3
TargetField target_box();
// 1 + sin(pi x) sin(pi y) sin(pi z); nonzero on the boundary
TargetField target_nonzero_bc();

struct ManufacturedExact {
  std::function<double(const Vec3&)> u;
  std::function<Vec3(const Vec3&)> grad_u;
};

// Closed-form solution of -rho Laplace(u) + u = target_smooth().
ManufacturedExact manufactured_exact(double rho);

}  // namespace rd
