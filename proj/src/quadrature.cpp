#include "rd/quadrature.hpp"

namespace rd {

namespace {

TetRule make_centroid() {
  TetRule r;
  r.points = Mat::Constant(1, 4, 0.25);
  r.weights = Vec::Constant(1, 1.0);
  return r;
}

TetRule make_degree2() {
  const double a = 0.1381966011250105;  // (5 - sqrt(5)) / 20
  const double b = 0.5854101966249685;  // (5 + 3 sqrt(5)) / 20
  TetRule r;
  r.points = Mat::Constant(4, 4, a);
  for (int i = 0; i < 4; ++i) r.points(i, i) = b;
  r.weights = Vec::Constant(4, 0.25);
  return r;
}

TetRule make_degree5() {
  // 14-point degree-5 rule (Keast): two 4-point symmetric orbits and one
  // 6-point edge-midpoint-type orbit.
  const double wa = 0.1126879257180162;
  const double a = 0.3108859192633005;
  const double wb = 0.0734930431163619;
  const double b = 0.0927352503108912;
  const double wc = 0.0425460207770812;
  const double c = 0.0455037041256497;
  TetRule r;
  r.points.resize(14, 4);
  r.weights.resize(14);
  int q = 0;
  for (int i = 0; i < 4; ++i, ++q) {
    r.points.row(q).setConstant(a);
    r.points(q, i) = 1.0 - 3.0 * a;
    r.weights(q) = wa;
  }
  for (int i = 0; i < 4; ++i, ++q) {
    r.points.row(q).setConstant(b);
    r.points(q, i) = 1.0 - 3.0 * b;
    r.weights(q) = wb;
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j, ++q) {
      r.points.row(q).setConstant(0.5 - c);
      r.points(q, i) = c;
      r.points(q, j) = c;
      r.weights(q) = wc;
    }
  return r;
}

TetRule make_subdivision64() {
  // Cells are stored as 4x4 matrices of barycentric vertex coordinates.
  // Centroid subdivision splits a cell into four equal-volume children,
  // so three levels give 64 cells sampled at their centroids.
  std::vector<Mat> cells{Mat::Identity(4, 4)};
  for (int level = 0; level < 3; ++level) {
    std::vector<Mat> next;
    next.reserve(cells.size() * 4);
    for (const Mat& cell : cells) {
      const Vec g = cell.colwise().mean();
      for (int i = 0; i < 4; ++i) {
        Mat child = cell;
        child.row(i) = g.transpose();
        next.push_back(child);
      }
    }
    cells.swap(next);
  }
  TetRule r;
  r.points.resize(static_cast<int>(cells.size()), 4);
  for (int q = 0; q < static_cast<int>(cells.size()); ++q)
    r.points.row(q) = cells[q].colwise().mean();
  r.weights = Vec::Constant(static_cast<int>(cells.size()),
                            1.0 / static_cast<double>(cells.size()));
  return r;
}

}  // namespace

const TetRule& tet_rule_centroid() {
  static const TetRule r = make_centroid();
  return r;
}

const TetRule& tet_rule_degree2() {
  static const TetRule r = make_degree2();
  return r;
}

const TetRule& tet_rule_degree5() {
  static const TetRule r = make_degree5();
  return r;
}

const TetRule& tet_rule_subdivision64() {
  static const TetRule r = make_subdivision64();
  return r;
}

Mat tet_rule_physical_points(const TetRule& rule, const std::array<Vec3, 4>& v) {
  Mat x(rule.size(), 3);
  for (int q = 0; q < rule.size(); ++q) {
    Vec3 p = Vec3::Zero();
    for (int k = 0; k < 4; ++k) p += rule.points(q, k) * v[static_cast<size_t>(k)];
    x.row(q) = p.transpose();
  }
  return x;
}

}  // namespace rd
