// SPDX-License-Identifier: Apache-2.0

#include "hstokes/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hstokes {

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void write_vtk(const Mesh& mesh, const std::string& path,
               const std::vector<VtkPointData>& point_data) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "# vtk DataFile Version 2.0\n";
  os << "hstokes mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.vertex_count() << " double\n";
  for (const auto& p : mesh.vertices)
    os << fmt(p[0]) << ' ' << fmt(p[1]) << ' ' << fmt(p[2]) << '\n';
  const int npc = mesh.dim + 1;
  os << "CELLS " << mesh.cell_count() << ' '
     << mesh.cell_count() * (npc + 1) << '\n';
  for (int c = 0; c < mesh.cell_count(); ++c) {
    os << npc;
    for (int v : mesh.cell(c)) os << ' ' << v;
    os << '\n';
  }
  os << "CELL_TYPES " << mesh.cell_count() << '\n';
  for (int c = 0; c < mesh.cell_count(); ++c)
    os << (mesh.dim == 2 ? 5 : 10) << '\n';
  if (!point_data.empty()) {
    os << "POINT_DATA " << mesh.vertex_count() << '\n';
    for (const auto& pd : point_data) {
      if (pd.values.size() !=
          static_cast<size_t>(mesh.vertex_count()) * pd.components)
        throw std::invalid_argument("point data size mismatch: " + pd.name);
      if (pd.components == 1) {
        os << "SCALARS " << pd.name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : pd.values) os << fmt(v) << '\n';
      } else {
        os << "VECTORS " << pd.name << " double\n";
        for (int i = 0; i < mesh.vertex_count(); ++i) {
          for (int c = 0; c < 3; ++c) {
            const double v = c < pd.components
                                 ? pd.values[i * pd.components + c]
                                 : 0.0;
            os << (c ? " " : "") << fmt(v);
          }
          os << '\n';
        }
      }
    }
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Mesh read_vtk(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line, tok;
  Mesh mesh;
  int npoints = -1, ncells = -1;
  std::vector<std::vector<int>> conn;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    ls >> tok;
    if (tok == "POINTS") {
      ls >> npoints;
      mesh.vertices.resize(npoints);
      for (int i = 0; i < npoints; ++i)
        is >> mesh.vertices[i][0] >> mesh.vertices[i][1] >> mesh.vertices[i][2];
    } else if (tok == "CELLS") {
      ls >> ncells;
      conn.resize(ncells);
      for (int c = 0; c < ncells; ++c) {
        int k;
        is >> k;
        conn[c].resize(k);
        for (int i = 0; i < k; ++i) is >> conn[c][i];
      }
    } else if (tok == "CELL_TYPES") {
      int n;
      ls >> n;
      for (int c = 0; c < n; ++c) {
        int t;
        is >> t;
        if (t != 5 && t != 10)
          throw std::runtime_error("unsupported VTK cell type " +
                                   std::to_string(t));
        const int d = (t == 5) ? 2 : 3;
        if (c == 0)
          mesh.dim = d;
        else if (mesh.dim != d)
          throw std::runtime_error("mixed cell types in VTK file");
      }
    }
  }
  if (npoints < 0 || ncells < 0)
    throw std::runtime_error("malformed VTK file: " + path);
  for (const auto& c : conn)
    mesh.cells.insert(mesh.cells.end(), c.begin(), c.end());
  // Re-derive boundary tags geometrically (legacy VTK carries none).
  std::map<FacetKey, int> count;
  const int nf = mesh.dim + 1;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    auto v = mesh.cell(c);
    for (int skip = 0; skip < nf; ++skip) {
      std::vector<int> f;
      for (int i = 0; i < nf; ++i)
        if (i != skip) f.push_back(v[i]);
      count[make_facet_key(f)]++;
    }
  }
  for (const auto& [key, cnt] : count) {
    if (cnt != 1) continue;
    if (mesh.dim == 2) {
      mesh.facet_tags[key] = BoundaryTag::dirichlet;
      continue;
    }
    double zmin = 0.0, zmax = -1e300, zlo = 1e300;
    bool bottomish = true, topish = true;
    for (int v : key) {
      if (v < 0) continue;
      const double z = mesh.vertices[v][2];
      zlo = std::min(zlo, z);
      zmax = std::max(zmax, z);
      topish = topish && std::abs(z) < 1e-12;
    }
    (void)zmin;
    for (int v : key) {
      if (v < 0) continue;
      bottomish = bottomish && std::abs(mesh.vertices[v][2] - zlo) < 1e-12;
    }
    bottomish = bottomish && zmax < -1e-12;
    mesh.facet_tags[key] = topish ? BoundaryTag::top
                                  : (bottomish ? BoundaryTag::bottom
                                               : BoundaryTag::lateral);
  }
  mesh.periodic_map.assign(mesh.vertex_count(), -1);
  return mesh;
}

void write_matrix_market(const Eigen::SparseMatrix<double>& mat,
                         const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << mat.rows() << ' ' << mat.cols() << ' ' << mat.nonZeros() << '\n';
  for (int k = 0; k < mat.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat, k); it; ++it)
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << fmt(it.value())
         << '\n';
}

Eigen::SparseMatrix<double> read_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  do {
    if (!std::getline(is, line))
      throw std::runtime_error("malformed MatrixMarket file");
  } while (!line.empty() && line[0] == '%');
  std::istringstream hs(line);
  int rows, cols;
  long nnz;
  hs >> rows >> cols >> nnz;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    int i, j;
    double v;
    is >> i >> j >> v;
    trips.emplace_back(i - 1, j - 1, v);
  }
  Eigen::SparseMatrix<double> m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

}  // namespace hstokes
