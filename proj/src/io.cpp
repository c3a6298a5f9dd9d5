#include "rd/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rd/linalg.hpp"

namespace rd {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

std::string next_data_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') return line;
  }
  throw std::runtime_error("unexpected end of MatrixMarket file");
}

}  // namespace

void write_matrix_market(const std::string& path, const SpMat& A) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  for (int i = 0; i < A.outerSize(); ++i)
    for (SpMat::InnerIterator it(A, i); it; ++it)
      out << it.row() + 1 << " " << it.col() + 1 << " " << fmt17(it.value()) << "\n";
}

SpMat read_matrix_market(const std::string& path) {
  auto in = open_in(path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("%%MatrixMarket", 0) != 0)
    throw std::runtime_error("not a MatrixMarket file: " + path);
  if (header.find("coordinate") == std::string::npos)
    throw std::runtime_error("expected coordinate format: " + path);
  std::istringstream sizes(next_data_line(in));
  long rows = 0, cols = 0, nnz = 0;
  sizes >> rows >> cols >> nnz;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(nnz));
  for (long k = 0; k < nnz; ++k) {
    std::istringstream entry(next_data_line(in));
    long i = 0, j = 0;
    double v = 0.0;
    entry >> i >> j >> v;
    trips.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
  }
  return from_triplets(static_cast<int>(rows), static_cast<int>(cols), trips);
}

void write_vector_market(const std::string& path, const Vec& v) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  for (int i = 0; i < v.size(); ++i) out << fmt17(v[i]) << "\n";
}

Vec read_vector_market(const std::string& path) {
  auto in = open_in(path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("%%MatrixMarket", 0) != 0)
    throw std::runtime_error("not a MatrixMarket file: " + path);
  if (header.find("array") == std::string::npos)
    throw std::runtime_error("expected array format: " + path);
  std::istringstream sizes(next_data_line(in));
  long rows = 0, cols = 0;
  sizes >> rows >> cols;
  if (cols != 1) throw std::runtime_error("expected a single column: " + path);
  Vec v(rows);
  for (long i = 0; i < rows; ++i) {
    std::istringstream entry(next_data_line(in));
    entry >> v[i];
  }
  return v;
}

void write_vtk(const std::string& path, const TetMesh& mesh,
               const std::vector<std::pair<std::string, Vec>>& point_fields,
               const std::vector<std::pair<std::string, Vec>>& cell_fields) {
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "rdsolve export\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_vertices() << " double\n";
  for (const auto& v : mesh.vertices)
    out << fmt17(v[0]) << " " << fmt17(v[1]) << " " << fmt17(v[2]) << "\n";
  out << "CELLS " << mesh.n_tets() << " " << static_cast<long>(mesh.n_tets()) * 5 << "\n";
  for (const auto& t : mesh.tets)
    out << "4 " << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
  out << "CELL_TYPES " << mesh.n_tets() << "\n";
  for (int t = 0; t < mesh.n_tets(); ++t) out << "10\n";
  if (!point_fields.empty()) {
    out << "POINT_DATA " << mesh.n_vertices() << "\n";
    for (const auto& [name, data] : point_fields) {
      if (data.size() != mesh.n_vertices())
        throw std::invalid_argument("write_vtk: point field size mismatch: " + name);
      out << "SCALARS " << name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (int i = 0; i < data.size(); ++i) out << fmt17(data[i]) << "\n";
    }
  }
  if (!cell_fields.empty()) {
    out << "CELL_DATA " << mesh.n_tets() << "\n";
    for (const auto& [name, data] : cell_fields) {
      if (data.size() != mesh.n_tets())
        throw std::invalid_argument("write_vtk: cell field size mismatch: " + name);
      out << "SCALARS " << name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (int i = 0; i < data.size(); ++i) out << fmt17(data[i]) << "\n";
    }
  }
}

}  // namespace rd
