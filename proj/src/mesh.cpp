#include "rd/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace rd {

namespace {

bool on_unit_boundary(const Vec3& x) {
  for (int c = 0; c < 3; ++c)
    if (std::abs(x[c]) <= 1e-14 || std::abs(x[c] - 1.0) <= 1e-14) return true;
  return false;
}

std::int64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::int64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

constexpr int kLocalEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

}  // namespace

TetMesh build_structured_cube(int n) {
  if (n < 1) throw std::invalid_argument("build_structured_cube: n must be >= 1");
  TetMesh m;
  const int nv = n + 1;
  auto vid = [nv](int i, int j, int k) { return (k * nv + j) * nv + i; };
  m.vertices.reserve(static_cast<size_t>(nv) * nv * nv);
  for (int k = 0; k < nv; ++k)
    for (int j = 0; j < nv; ++j)
      for (int i = 0; i < nv; ++i) {
        const Vec3 x(static_cast<double>(i) / n, static_cast<double>(j) / n,
                     static_cast<double>(k) / n);
        m.vertices.push_back(x);
        m.boundary_vertex.push_back(on_unit_boundary(x) ? 1 : 0);
      }
  // Each cell is split into the 6 tets whose vertex chains walk from the
  // low corner to the high corner, one axis step at a time. All chains are
  // tagged d=3 so the first refinement edge is the cell diagonal.
  constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                               {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  m.tets.reserve(static_cast<size_t>(n) * n * n * 6);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& perm : perms) {
          std::array<int, 4> t;
          int c[3] = {i, j, k};
          t[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            c[perm[s]] += 1;
            t[s + 1] = vid(c[0], c[1], c[2]);
          }
          m.tets.push_back(t);
          m.refinement_edge.push_back(3);
          m.generation.push_back(0);
        }
  return m;
}

TetMesh bisect_marked(const TetMesh& mesh, const std::vector<int>& marked) {
  TetMesh m = mesh;
  std::vector<std::uint8_t> flag(m.tets.size(), 0);
  for (int t : marked) {
    if (t < 0 || t >= m.n_tets())
      throw std::out_of_range("bisect_marked: tet index out of range");
    flag[static_cast<size_t>(t)] = 1;
  }

  // Midpoints of every edge split during this call, keyed by vertex pair.
  std::unordered_map<std::int64_t, int> midpoint;
  auto mid_vertex = [&m, &midpoint](int a, int b) {
    const std::int64_t key = edge_key(a, b);
    const auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int z = m.n_vertices();
    const Vec3 x = 0.5 * (m.vertices[static_cast<size_t>(a)] +
                          m.vertices[static_cast<size_t>(b)]);
    m.vertices.push_back(x);
    m.boundary_vertex.push_back(on_unit_boundary(x) ? 1 : 0);
    midpoint.emplace(key, z);
    return z;
  };

  constexpr int max_rounds = 1000;
  int round = 0;
  while (std::find(flag.begin(), flag.end(), std::uint8_t{1}) != flag.end()) {
    if (++round > max_rounds)
      throw std::logic_error("bisect_marked: conforming closure did not terminate");
    std::vector<std::array<int, 4>> tets;
    std::vector<std::uint8_t> tags;
    std::vector<std::int32_t> gens;
    tets.reserve(m.tets.size() * 2);
    tags.reserve(m.tets.size() * 2);
    gens.reserve(m.tets.size() * 2);
    for (size_t t = 0; t < m.tets.size(); ++t) {
      if (!flag[t]) {
        tets.push_back(m.tets[t]);
        tags.push_back(m.refinement_edge[t]);
        gens.push_back(m.generation[t]);
        continue;
      }
      const auto p = m.tets[t];
      const int d = m.refinement_edge[t];
      const int z = mid_vertex(p[0], p[static_cast<size_t>(d)]);
      std::array<int, 4> c1 = p;
      c1[static_cast<size_t>(d)] = z;
      std::array<int, 4> c2;
      for (int s = 0; s < d; ++s) c2[static_cast<size_t>(s)] = p[static_cast<size_t>(s + 1)];
      c2[static_cast<size_t>(d)] = z;
      for (int s = d + 1; s < 4; ++s) c2[static_cast<size_t>(s)] = p[static_cast<size_t>(s)];
      const std::uint8_t nd = static_cast<std::uint8_t>(d == 1 ? 3 : d - 1);
      const std::int32_t g = m.generation[t] + 1;
      tets.push_back(c1);
      tags.push_back(nd);
      gens.push_back(g);
      tets.push_back(c2);
      tags.push_back(nd);
      gens.push_back(g);
    }
    m.tets = std::move(tets);
    m.refinement_edge = std::move(tags);
    m.generation = std::move(gens);

    // Closure: any tet still carrying a split edge must be bisected too.
    flag.assign(m.tets.size(), 0);
    for (size_t t = 0; t < m.tets.size(); ++t) {
      const auto& v = m.tets[t];
      for (const auto& e : kLocalEdges) {
        if (midpoint.count(edge_key(v[static_cast<size_t>(e[0])],
                                    v[static_cast<size_t>(e[1])]))) {
          flag[t] = 1;
          break;
        }
      }
    }
  }
  return m;
}

TetMesh uniform_refine(const TetMesh& mesh) {
  std::vector<int> all(mesh.tets.size());
  std::iota(all.begin(), all.end(), 0);
  TetMesh m = bisect_marked(mesh, all);
  for (int sweep = 1; sweep < 3; ++sweep) {
    all.resize(m.tets.size());
    std::iota(all.begin(), all.end(), 0);
    m = bisect_marked(m, all);
  }
  return m;
}

MeshStats mesh_stats(const TetMesh& mesh) {
  MeshStats s;
  s.n_vertices = mesh.n_vertices();
  s.n_tets = mesh.n_tets();
  s.n_interior_dofs = 0;
  for (const auto b : mesh.boundary_vertex)
    if (!b) ++s.n_interior_dofs;
  double hmax = 0.0, hmin = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.tets)
    for (const auto& e : kLocalEdges) {
      const double len = (mesh.vertices[static_cast<size_t>(t[static_cast<size_t>(e[0])])] -
                          mesh.vertices[static_cast<size_t>(t[static_cast<size_t>(e[1])])])
                             .norm();
      hmax = std::max(hmax, len);
      hmin = std::min(hmin, len);
    }
  s.h_max = mesh.tets.empty() ? 0.0 : hmax;
  s.h_min = mesh.tets.empty() ? 0.0 : hmin;
  return s;
}

std::array<Vec3, 4> tet_vertices(const TetMesh& mesh, int t) {
  const auto& tet = mesh.tets[static_cast<size_t>(t)];
  return {mesh.vertices[static_cast<size_t>(tet[0])],
          mesh.vertices[static_cast<size_t>(tet[1])],
          mesh.vertices[static_cast<size_t>(tet[2])],
          mesh.vertices[static_cast<size_t>(tet[3])]};
}

double tet_volume(const TetMesh& mesh, int t) {
  const auto v = tet_vertices(mesh, t);
  return std::abs((v[1] - v[0]).cross(v[2] - v[0]).dot(v[3] - v[0])) / 6.0;
}

}  // namespace rd
