// SPDX-License-Identifier: Apache-2.0

#include "hstokes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hstokes {

namespace {

constexpr double kGeomTol = 1e-12;

double dist(const Point& a, const Point& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::array<double, 3> cross(const std::array<double, 3>& a,
                            const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

std::array<double, 3> diff(const Point& a, const Point& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

double signed_volume(const Mesh& m, std::span<const int> c) {
  if (m.dim == 2) {
    const Point& p0 = m.vertices[c[0]];
    const Point& p1 = m.vertices[c[1]];
    const Point& p2 = m.vertices[c[2]];
    return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) -
                  (p2[0] - p0[0]) * (p1[1] - p0[1]));
  }
  const auto e1 = diff(m.vertices[c[1]], m.vertices[c[0]]);
  const auto e2 = diff(m.vertices[c[2]], m.vertices[c[0]]);
  const auto e3 = diff(m.vertices[c[3]], m.vertices[c[0]]);
  const auto cx = cross(e1, e2);
  return (cx[0] * e3[0] + cx[1] * e3[1] + cx[2] * e3[2]) / 6.0;
}

double triangle_area_3d(const Point& a, const Point& b, const Point& c) {
  const auto cx = cross(diff(b, a), diff(c, a));
  return 0.5 * std::sqrt(cx[0] * cx[0] + cx[1] * cx[1] + cx[2] * cx[2]);
}

}  // namespace

FacetKey make_facet_key(std::span<const int> verts) {
  FacetKey k{-1, -1, -1};
  for (size_t i = 0; i < verts.size(); ++i) k[3 - verts.size() + i] = verts[i];
  std::sort(k.begin(), k.end());
  return k;
}

double Mesh::cell_volume(int c) const { return signed_volume(*this, cell(c)); }

double Mesh::cell_diameter(int c) const {
  auto v = cell(c);
  double d = 0.0;
  for (int i = 0; i <= dim; ++i)
    for (int j = i + 1; j <= dim; ++j)
      d = std::max(d, dist(vertices[v[i]], vertices[v[j]]));
  return d;
}

double Mesh::cell_inradius(int c) const {
  auto v = cell(c);
  const double vol = cell_volume(c);
  if (dim == 2) {
    double per = dist(vertices[v[0]], vertices[v[1]]) +
                 dist(vertices[v[1]], vertices[v[2]]) +
                 dist(vertices[v[2]], vertices[v[0]]);
    return 2.0 * vol / per;
  }
  double area = 0.0;
  for (int skip = 0; skip < 4; ++skip) {
    std::array<int, 3> f;
    int t = 0;
    for (int i = 0; i < 4; ++i)
      if (i != skip) f[t++] = v[i];
    area += triangle_area_3d(vertices[f[0]], vertices[f[1]], vertices[f[2]]);
  }
  return 3.0 * vol / area;
}

double Mesh::mesh_size() const {
  double h = 0.0;
  for (int c = 0; c < cell_count(); ++c) h = std::max(h, cell_diameter(c));
  return h;
}

double Mesh::min_shape_ratio() const {
  double r = 1.0;
  for (int c = 0; c < cell_count(); ++c)
    r = std::min(r, cell_inradius(c) / cell_diameter(c));
  return r;
}

double Mesh::total_volume() const {
  double v = 0.0;
  for (int c = 0; c < cell_count(); ++c) v += cell_volume(c);
  return v;
}

int Mesh::resolve_periodic(int v) const {
  int guard = 0;
  while (v < static_cast<int>(periodic_map.size()) && periodic_map[v] >= 0) {
    v = periodic_map[v];
    if (++guard > 4) throw std::runtime_error("periodic map has a cycle");
  }
  return v;
}

void Mesh::validate() const {
  std::map<FacetKey, int> count;
  const int nf = dim + 1;  // facets per cell
  for (int c = 0; c < cell_count(); ++c) {
    if (cell_volume(c) <= 0.0)
      throw std::runtime_error("cell " + std::to_string(c) +
                               " has non-positive volume");
    auto v = cell(c);
    for (int skip = 0; skip < nf; ++skip) {
      std::vector<int> f;
      for (int i = 0; i < nf; ++i)
        if (i != skip) f.push_back(v[i]);
      count[make_facet_key(f)]++;
    }
  }
  for (const auto& [key, n] : count) {
    if (n > 2) throw std::runtime_error("facet shared by more than two cells");
    if (n == 1 && facet_tags.find(key) == facet_tags.end())
      throw std::runtime_error("untagged boundary facet");
  }
  for (const auto& [key, tag] : facet_tags) {
    auto it = count.find(key);
    if (it == count.end() || it->second != 1)
      throw std::runtime_error("facet tag on a non-boundary facet");
  }
}

Mesh triangulate_unit_square(int n) {
  if (n < 1) throw std::invalid_argument("subdivision count must be >= 1");
  Mesh m;
  m.dim = 2;
  m.vertices.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.vertices.push_back({static_cast<double>(i) / n,
                            static_cast<double>(j) / n, 0.0});
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  m.cells.reserve(6 * n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int s00 = vid(i, j), s10 = vid(i + 1, j);
      const int s01 = vid(i, j + 1), s11 = vid(i + 1, j + 1);
      // SW-NE diagonal
      m.cells.insert(m.cells.end(), {s00, s10, s11});
      m.cells.insert(m.cells.end(), {s00, s11, s01});
    }
  auto tag_edge = [&m](int a, int b) {
    std::array<int, 2> e{a, b};
    m.facet_tags[make_facet_key(e)] = BoundaryTag::dirichlet;
  };
  for (int i = 0; i < n; ++i) {
    tag_edge(vid(i, 0), vid(i + 1, 0));
    tag_edge(vid(i, n), vid(i + 1, n));
    tag_edge(vid(0, i), vid(0, i + 1));
    tag_edge(vid(n, i), vid(n, i + 1));
  }
  m.periodic_map.assign(m.vertex_count(), -1);
  return m;
}

std::pair<Mesh, PrismaticStructure> build_prismatic_mesh(const Mesh& surface,
                                                         double depth,
                                                         int layers) {
  if (surface.dim != 2)
    throw std::invalid_argument("prismatic extrusion needs a 2D surface mesh");
  if (depth <= 0.0) throw std::invalid_argument("depth must be positive");
  if (layers < 1) throw std::invalid_argument("layer count must be >= 1");
  surface.validate();  // rejects non-conforming or degenerate input

  const int nsv = surface.vertex_count();
  Mesh m;
  m.dim = 3;
  m.vertices.reserve(static_cast<size_t>(nsv) * (layers + 1));
  // Level l = 0 is the bottom z = -depth; level `layers` is the surface z = 0.
  for (int l = 0; l <= layers; ++l) {
    const double z = -depth + depth * static_cast<double>(l) / layers;
    for (int s = 0; s < nsv; ++s) {
      const Point& p = surface.vertices[s];
      m.vertices.push_back({p[0], p[1], z});
    }
  }

  PrismaticStructure ps;
  ps.surface_mesh = surface;
  ps.layers = layers;
  ps.depth = depth;

  auto push_tet = [&m](std::array<int, 4> t) {
    const size_t at = m.cells.size();
    m.cells.insert(m.cells.end(), t.begin(), t.end());
    const int c = static_cast<int>(at) / 4;
    if (m.cell_volume(c) < 0.0) std::swap(m.cells[at + 2], m.cells[at + 3]);
    if (m.cell_volume(c) <= 0.0)
      throw std::invalid_argument("degenerate surface triangle in extrusion");
  };

  for (int l = 0; l < layers; ++l) {
    for (int t = 0; t < surface.cell_count(); ++t) {
      auto tri = surface.cell(t);
      // Sort columns by surface vertex id: the lowest-global-index diagonal
      // rule then splits every quad prism face consistently on both sides.
      std::array<int, 3> col{tri[0], tri[1], tri[2]};
      std::sort(col.begin(), col.end());
      const int v0 = l * nsv + col[0], v1 = l * nsv + col[1],
                v2 = l * nsv + col[2];
      const int w0 = v0 + nsv, w1 = v1 + nsv, w2 = v2 + nsv;
      push_tet({v0, v1, v2, w2});
      push_tet({v0, v1, w1, w2});
      push_tet({v0, w0, w1, w2});
      const int prism = l * surface.cell_count() + t;
      for (int r = 0; r < 3; ++r) {
        ps.cell_to_prism.push_back(prism);
        ps.cell_to_surface.push_back(t);
      }
    }
  }

  // Boundary tags: bottom z=-depth, top z=0, lateral otherwise.
  std::map<FacetKey, int> count;
  for (int c = 0; c < m.cell_count(); ++c) {
    auto v = m.cell(c);
    for (int skip = 0; skip < 4; ++skip) {
      std::array<int, 3> f;
      int k = 0;
      for (int i = 0; i < 4; ++i)
        if (i != skip) f[k++] = v[i];
      count[make_facet_key(f)]++;
    }
  }
  for (const auto& [key, cnt] : count) {
    if (cnt != 1) continue;
    bool bottom = true, top = true;
    for (int v : key) {
      bottom = bottom && std::abs(m.vertices[v][2] + depth) < kGeomTol;
      top = top && std::abs(m.vertices[v][2]) < kGeomTol;
    }
    m.facet_tags[key] = bottom ? BoundaryTag::bottom
                               : (top ? BoundaryTag::top : BoundaryTag::lateral);
  }
  m.periodic_map.assign(m.vertex_count(), -1);
  m.validate();
  return {std::move(m), std::move(ps)};
}

Mesh induced_surface_triangulation(const Mesh& mesh3d,
                                   const PrismaticStructure& structure) {
  if (mesh3d.dim != 3)
    throw std::invalid_argument("induced triangulation needs a 3D mesh");
  // Audit the prismatic condition before trusting the structure.
  if (static_cast<int>(structure.cell_to_surface.size()) != mesh3d.cell_count())
    throw std::invalid_argument("mesh is not prismatic (structure mismatch)");

  Mesh out;
  out.dim = 2;
  const Mesh& surf = structure.surface_mesh;
  std::vector<int> vmap(mesh3d.vertex_count(), -1);
  std::vector<std::array<int, 3>> tris;
  for (const auto& [key, tag] : mesh3d.facet_tags) {
    if (tag != BoundaryTag::top) continue;
    std::array<int, 3> t{key[0], key[1], key[2]};
    for (int& v : t) {
      if (vmap[v] < 0) {
        vmap[v] = out.vertex_count();
        out.vertices.push_back(
            {mesh3d.vertices[v][0], mesh3d.vertices[v][1], 0.0});
      }
      v = vmap[v];
    }
    tris.push_back(t);
  }
  if (tris.size() != static_cast<size_t>(surf.cell_count()))
    throw std::invalid_argument("mesh is not prismatic (top facet count)");
  for (auto& t : tris) {
    out.cells.insert(out.cells.end(), t.begin(), t.end());
    const int c = out.cell_count() - 1;
    if (out.cell_volume(c) < 0.0)
      std::swap(out.cells[3 * c + 1], out.cells[3 * c + 2]);
  }
  // Tag boundary edges so the result is a valid standalone mesh.
  std::map<FacetKey, int> ecount;
  for (int c = 0; c < out.cell_count(); ++c) {
    auto v = out.cell(c);
    for (int skip = 0; skip < 3; ++skip) {
      std::vector<int> e;
      for (int i = 0; i < 3; ++i)
        if (i != skip) e.push_back(v[i]);
      ecount[make_facet_key(e)]++;
    }
  }
  for (const auto& [key, cnt] : ecount)
    if (cnt == 1) out.facet_tags[key] = BoundaryTag::dirichlet;
  out.periodic_map.assign(out.vertex_count(), -1);
  out.validate();
  return out;
}

Mesh identify_periodic(Mesh mesh, bool dir_x, bool dir_y) {
  mesh.periodic_map.assign(mesh.vertex_count(), -1);
  mesh.periodic_x = dir_x;
  mesh.periodic_y = dir_y;

  // Lexicographic index of vertex coordinates for tolerant lookup.
  std::vector<int> order(mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i) order[i] = i;
  auto less = [&mesh](int a, int b) {
    const Point& pa = mesh.vertices[a];
    const Point& pb = mesh.vertices[b];
    for (int d = 0; d < 3; ++d) {
      if (pa[d] < pb[d] - kGeomTol) return true;
      if (pa[d] > pb[d] + kGeomTol) return false;
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  auto find_vertex = [&](const Point& p) -> int {
    int lo = 0, hi = mesh.vertex_count();
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      const Point& q = mesh.vertices[order[mid]];
      bool qless = false, qgreater = false;
      for (int d = 0; d < 3; ++d) {
        if (q[d] < p[d] - kGeomTol) { qless = true; break; }
        if (q[d] > p[d] + kGeomTol) { qgreater = true; break; }
      }
      if (qless) lo = mid + 1;
      else if (qgreater) hi = mid;
      else return order[mid];
    }
    return -1;
  };

  auto hop = [&](int v, int axis) {
    const Point& p = mesh.vertices[v];
    if (std::abs(p[axis] - 1.0) > kGeomTol) return;
    Point q = p;
    q[axis] -= 1.0;
    const int master = find_vertex(q);
    if (master < 0) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "no periodic partner for vertex (%.17g, %.17g, %.17g) "
                    "in direction %c",
                    p[0], p[1], p[2], axis == 0 ? 'x' : 'y');
      throw std::runtime_error(buf);
    }
    mesh.periodic_map[v] = master;
  };

  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (dir_x) hop(v, 0);
    // A corner/edge vertex slaved in x keeps that hop; its x-master is the
    // one that picks up the y-hop, so chains resolve to the unique master.
    if (dir_y && mesh.periodic_map[v] < 0) hop(v, 1);
  }
  return mesh;
}

int identified_vertex_count(const Mesh& mesh) {
  int n = 0;
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.periodic_map.empty() || mesh.periodic_map[v] < 0) ++n;
  return n;
}

int identified_euler_characteristic(const Mesh& mesh2d) {
  if (mesh2d.dim != 2)
    throw std::invalid_argument("Euler characteristic audit is 2D-only");
  const int V = identified_vertex_count(mesh2d);
  std::map<std::array<int, 2>, int> edges;
  for (int c = 0; c < mesh2d.cell_count(); ++c) {
    auto cv = mesh2d.cell(c);
    for (int i = 0; i < 3; ++i) {
      int a = mesh2d.resolve_periodic(cv[i]);
      int b = mesh2d.resolve_periodic(cv[(i + 1) % 3]);
      if (a > b) std::swap(a, b);
      edges[{a, b}]++;
    }
  }
  const int E = static_cast<int>(edges.size());
  const int F = mesh2d.cell_count();
  return V - E + F;
}

}  // namespace hstokes
