// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hstokes {

using Point = std::array<double, 3>;

enum class BoundaryTag { bottom, top, lateral, dirichlet };

/// Sorted vertex tuple identifying a facet (edge in 2D, triangle in 3D).
/// Unused slots are -1 and sort first.
using FacetKey = std::array<int, 3>;

FacetKey make_facet_key(std::span<const int> verts);

/// Conforming simplicial mesh of the unit square (dim 2) or of the box
/// G x (-D, 0) (dim 3). Cells are stored as a flat index array with
/// stride dim+1 and positive orientation. Periodic identification is
/// stored as single-translation hops; resolve_periodic() chases chains.
struct Mesh {
  int dim = 2;
  std::vector<Point> vertices;
  std::vector<int> cells;  // stride dim+1
  std::map<FacetKey, BoundaryTag> facet_tags;
  std::vector<int> periodic_map;  // per vertex: single-hop master or -1
  bool periodic_x = false;
  bool periodic_y = false;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int cell_count() const { return static_cast<int>(cells.size()) / (dim + 1); }
  std::span<const int> cell(int c) const {
    return std::span<const int>(cells.data() + c * (dim + 1), dim + 1);
  }

  double cell_volume(int c) const;
  double cell_diameter(int c) const;
  double cell_inradius(int c) const;
  /// h = max over cells of the diameter.
  double mesh_size() const;
  double min_shape_ratio() const;  // min over cells of inradius/diameter
  double total_volume() const;

  /// Final master of a vertex under the periodic identification.
  int resolve_periodic(int v) const;

  /// Conformity audit: every interior facet shared by exactly two cells,
  /// every boundary facet by one and carrying a tag. Throws on violation.
  void validate() const;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Bookkeeping for tetrahedral meshes obtained by extruding a surface
/// triangulation into layered prisms and splitting each prism into 3 tets.
struct PrismaticStructure {
  Mesh surface_mesh;                 // 2D triangulation of G
  std::vector<int> cell_to_prism;    // per tet: prism index
  std::vector<int> cell_to_surface;  // per tet: parent surface triangle
  int layers = 0;
  double depth = 0.0;

  int prism_count() const { return layers * surface_mesh.cell_count(); }
};

/// Uniform n x n triangulation of (0,1)^2, each square split along its
/// SW-NE diagonal. Boundary edges are tagged dirichlet.
Mesh triangulate_unit_square(int n);

/// Extrude a surface triangulation of G into m layers over (-depth, 0) and
/// split every prism into 3 tetrahedra with the lowest-global-index
/// diagonal rule, which makes the split conforming across prisms.
std::pair<Mesh, PrismaticStructure> build_prismatic_mesh(const Mesh& surface,
                                                         double depth,
                                                         int layers);

/// The triangulation of G induced by a prismatic mesh: the top-boundary
/// facets of the tets, projected to z = 0.
Mesh induced_surface_triangulation(const Mesh& mesh3d,
                                   const PrismaticStructure& structure);

/// Fill periodic_map for the requested directions: every boundary vertex at
/// x = 1 (resp. y = 1) is mapped one hop to its translate at x = 0
/// (resp. y = 0). Throws with the offending coordinates when a vertex has
/// no partner within 1e-12.
Mesh identify_periodic(Mesh mesh, bool dir_x, bool dir_y);

/// Euler characteristic V - E + F of the periodically identified complex.
int identified_euler_characteristic(const Mesh& mesh2d);

/// Number of distinct vertex classes after periodic identification.
int identified_vertex_count(const Mesh& mesh);

}  // namespace hstokes
