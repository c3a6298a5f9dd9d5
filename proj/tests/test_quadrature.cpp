#include <doctest.h>

#include <array>

#include "rd/quadrature.hpp"

#include "oracles.hpp"

using namespace rd;

namespace {

// Rule integral of a barycentric monomial over a tet of given volume.
double rule_integral(const TetRule& rule, double volume, std::array<int, 4> e) {
  double acc = 0.0;
  for (int q = 0; q < rule.size(); ++q) {
    double term = 1.0;
    for (int c = 0; c < 4; ++c)
      for (int k = 0; k < e[static_cast<size_t>(c)]; ++k)
        term *= rule.points(q, c);
    acc += rule.weights[q] * term;
  }
  return volume * acc;
}

}  // namespace

TEST_CASE("rule weights are positive and sum to one") {
  for (const TetRule* rule :
       {&tet_rule_centroid(), &tet_rule_degree2(), &tet_rule_degree5(),
        &tet_rule_subdivision64()}) {
    double sum = 0.0;
    for (int q = 0; q < rule->size(); ++q) {
      CHECK(rule->weights[q] > 0.0);
      sum += rule->weights[q];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("rule points are valid barycentric coordinates") {
  for (const TetRule* rule :
       {&tet_rule_centroid(), &tet_rule_degree2(), &tet_rule_degree5(),
        &tet_rule_subdivision64()}) {
    for (int q = 0; q < rule->size(); ++q) {
      double sum = 0.0;
      for (int c = 0; c < 4; ++c) {
        CHECK(rule->points(q, c) >= 0.0);
        sum += rule->points(q, c);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("rule sizes") {
  CHECK(tet_rule_centroid().size() == 1);
  CHECK(tet_rule_degree2().size() == 4);
  CHECK(tet_rule_degree5().size() == 14);
  CHECK(tet_rule_subdivision64().size() == 64);
}

TEST_CASE("centroid rule integrates linears exactly") {
  double v = 0.37;
  CHECK(rule_integral(tet_rule_centroid(), v, {1, 0, 0, 0}) ==
        doctest::Approx(oracle::bary_integral(v, {1, 0, 0, 0})).epsilon(1e-14));
}

TEST_CASE("four point rule integrates quadratics exactly") {
  double v = 1.0 / 6.0;
  for (std::array<int, 4> e : std::array<std::array<int, 4>, 4>{
           {{2, 0, 0, 0}, {1, 1, 0, 0}, {0, 1, 1, 0}, {0, 0, 0, 2}}}) {
    CHECK(rule_integral(tet_rule_degree2(), v, e) ==
          doctest::Approx(oracle::bary_integral(v, e)).epsilon(1e-13));
  }
}

TEST_CASE("fourteen point rule integrates quintics exactly") {
  double v = 0.8;
  for (std::array<int, 4> e : std::array<std::array<int, 4>, 6>{{{5, 0, 0, 0},
                                                                 {3, 2, 0, 0},
                                                                 {2, 2, 1, 0},
                                                                 {1, 1, 1, 2},
                                                                 {0, 4, 1, 0},
                                                                 {2, 1, 1, 1}}}) {
    CHECK(rule_integral(tet_rule_degree5(), v, e) ==
          doctest::Approx(oracle::bary_integral(v, e)).epsilon(1e-12));
  }
}

TEST_CASE("subdivision rule is exact for linears and equal weighted") {
  const TetRule& r = tet_rule_subdivision64();
  for (int q = 0; q < r.size(); ++q)
    CHECK(r.weights[q] == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
  for (std::array<int, 4> e : std::array<std::array<int, 4>, 2>{
           {{1, 0, 0, 0}, {0, 0, 1, 0}}}) {
    CHECK(rule_integral(r, 0.25, e) ==
          doctest::Approx(oracle::bary_integral(0.25, e)).epsilon(1e-13));
  }
}

TEST_CASE("physical points map barycentric to cartesian") {
  std::array<Vec3, 4> verts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                               Vec3(0, 0, 1)};
  Mat pts = tet_rule_physical_points(tet_rule_centroid(), verts);
  REQUIRE(pts.rows() == 1);
  REQUIRE(pts.cols() == 3);
  CHECK(pts(0, 0) == doctest::Approx(0.25));
  CHECK(pts(0, 1) == doctest::Approx(0.25));
  CHECK(pts(0, 2) == doctest::Approx(0.25));

  std::array<Vec3, 4> shifted = {Vec3(1, 1, 1), Vec3(3, 1, 1), Vec3(1, 3, 1),
                                 Vec3(1, 1, 3)};
  Mat pts2 = tet_rule_physical_points(tet_rule_degree2(), shifted);
  for (int q = 0; q < 4; ++q) {
    Vec3 x = Vec3::Zero();
    for (int c = 0; c < 4; ++c)
      x += tet_rule_degree2().points(q, c) * shifted[static_cast<size_t>(c)];
    CHECK((pts2.row(q).transpose() - x).norm() == doctest::Approx(0.0));
  }
}
