// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/SparseCore>
#include <string>
#include <vector>

#include "hstokes/mesh.hpp"

namespace hstokes {

/// Legacy ASCII VTK unstructured grid (cell types 5 = triangle,
/// 10 = tetrahedron). Optional point data arrays must have
/// vertex_count() * components entries each.
struct VtkPointData {
  std::string name;
  int components = 1;
  std::vector<double> values;
};

void write_vtk(const Mesh& mesh, const std::string& path,
               const std::vector<VtkPointData>& point_data = {});

Mesh read_vtk(const std::string& path);

/// Matrix Market coordinate format dump for external verification.
void write_matrix_market(const Eigen::SparseMatrix<double>& mat,
                         const std::string& path);

Eigen::SparseMatrix<double> read_matrix_market(const std::string& path);

}  // namespace hstokes
