#include "rd/target.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rd {

namespace {
constexpr double kPi = std::numbers::pi;

double sin3(const Vec3& x) {
  return std::sin(kPi * x[0]) * std::sin(kPi * x[1]) * std::sin(kPi * x[2]);
}
}  // namespace

TargetField target_smooth() {
  TargetField t;
  t.evaluator = [](const Vec3& x) { return sin3(x); };
  t.smoothness_tag = Smoothness::smooth_h2;
  t.quadrature_order_hint = 5;
  return t;
}

TargetField target_box() {
  TargetField t;
  t.evaluator = [](const Vec3& x) {
    const bool inside = x[0] > 0.25 && x[0] < 0.75 && x[1] > 0.25 &&
                        x[1] < 0.75 && x[2] > 0.25 && x[2] < 0.75;
    return inside ? 1.0 : 0.0;
  };
  t.smoothness_tag = Smoothness::discontinuous;
  t.quadrature_order_hint = 1;
  return t;
}

TargetField target_nonzero_bc() {
  TargetField t;
  t.evaluator = [](const Vec3& x) { return 1.0 + sin3(x); };
  t.smoothness_tag = Smoothness::smooth_nonzero_bc;
  t.quadrature_order_hint = 5;
  return t;
}

ManufacturedExact manufactured_exact(double rho) {
  if (rho < 0.0) throw std::invalid_argument("manufactured_exact: rho must be >= 0");
  const double c = 1.0 / (3.0 * rho * kPi * kPi + 1.0);
  ManufacturedExact e;
  e.u = [c](const Vec3& x) { return c * sin3(x); };
  e.grad_u = [c](const Vec3& x) {
    const double sx = std::sin(kPi * x[0]), cx = std::cos(kPi * x[0]);
    const double sy = std::sin(kPi * x[1]), cy = std::cos(kPi * x[1]);
    const double sz = std::sin(kPi * x[2]), cz = std::cos(kPi * x[2]);
    return Vec3(c * kPi * cx * sy * sz, c * kPi * sx * cy * sz,
                c * kPi * sx * sy * cz);
  };
  return e;
}

}  // namespace rd
