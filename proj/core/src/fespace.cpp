// SPDX-License-Identifier: Apache-2.0

#include "hstokes/fespace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "hstokes/quadrature.hpp"

namespace hstokes {

namespace {

constexpr double kGeomTol = 1e-12;

// Canonical local edges for P2.
constexpr int kTriEdges[3][2] = {{0, 1}, {0, 2}, {1, 2}};
constexpr int kTetEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

}  // namespace

int basis_count(Family family, int dim) {
  const int nv = dim + 1;
  switch (family) {
    case Family::P1: return nv;
    case Family::P1Bubble: return nv + 1;
    case Family::P2: return nv + (dim == 2 ? 3 : 6);
  }
  return 0;
}

void basis_values(Family family, int dim, const double* b, double* vals) {
  const int nv = dim + 1;
  if (family == Family::P1) {
    for (int i = 0; i < nv; ++i) vals[i] = b[i];
    return;
  }
  if (family == Family::P1Bubble) {
    for (int i = 0; i < nv; ++i) vals[i] = b[i];
    vals[nv] = (dim == 2) ? 27.0 * b[0] * b[1] * b[2]
                          : 256.0 * b[0] * b[1] * b[2] * b[3];
    return;
  }
  // P2
  for (int i = 0; i < nv; ++i) vals[i] = b[i] * (2.0 * b[i] - 1.0);
  const int ne = (dim == 2) ? 3 : 6;
  for (int e = 0; e < ne; ++e) {
    const int* ev = (dim == 2) ? kTriEdges[e] : kTetEdges[e];
    vals[nv + e] = 4.0 * b[ev[0]] * b[ev[1]];
  }
}

void basis_gradients(Family family, int dim, const double* b,
                     const Eigen::Vector3d gb[4], Eigen::Vector3d* grads) {
  const int nv = dim + 1;
  if (family == Family::P1 || family == Family::P1Bubble) {
    for (int i = 0; i < nv; ++i) grads[i] = gb[i];
    if (family == Family::P1Bubble) {
      if (dim == 2) {
        grads[nv] = 27.0 * (b[1] * b[2] * gb[0] + b[0] * b[2] * gb[1] +
                            b[0] * b[1] * gb[2]);
      } else {
        grads[nv] = 256.0 * (b[1] * b[2] * b[3] * gb[0] +
                             b[0] * b[2] * b[3] * gb[1] +
                             b[0] * b[1] * b[3] * gb[2] +
                             b[0] * b[1] * b[2] * gb[3]);
      }
    }
    return;
  }
  for (int i = 0; i < nv; ++i) grads[i] = (4.0 * b[i] - 1.0) * gb[i];
  const int ne = (dim == 2) ? 3 : 6;
  for (int e = 0; e < ne; ++e) {
    const int* ev = (dim == 2) ? kTriEdges[e] : kTetEdges[e];
    grads[nv + e] = 4.0 * (b[ev[1]] * gb[ev[0]] + b[ev[0]] * gb[ev[1]]);
  }
}

CellGeometry cell_geometry(const Mesh& mesh, int c) {
  CellGeometry g;
  auto cv = mesh.cell(c);
  g.nverts = mesh.dim + 1;
  for (int i = 0; i < g.nverts; ++i) g.verts[i] = mesh.vertices[cv[i]];
  g.volume = mesh.cell_volume(c);
  if (mesh.dim == 2) {
    // grad lambda_i = rot(opposite edge) / (2 |T|)
    for (int i = 0; i < 3; ++i) {
      const Point& a = g.verts[(i + 1) % 3];
      const Point& b = g.verts[(i + 2) % 3];
      g.grad_bary[i] =
          Eigen::Vector3d(a[1] - b[1], b[0] - a[0], 0.0) / (2.0 * g.volume);
    }
    g.grad_bary[3].setZero();
  } else {
    Eigen::Matrix3d J;
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 3; ++d) J(d, i) = g.verts[i + 1][d] - g.verts[0][d];
    const Eigen::Matrix3d Jinv = J.inverse();
    for (int i = 0; i < 3; ++i) g.grad_bary[i + 1] = Jinv.row(i).transpose();
    g.grad_bary[0] = -(g.grad_bary[1] + g.grad_bary[2] + g.grad_bary[3]);
  }
  return g;
}

namespace {

struct DofTables {
  int n_scalar;
  int dofs_per_cell;
  std::vector<int> cell_dofs;
  std::vector<Point> dof_points;
  // ranges: [0, nv) vertices, [nv, nv+ne) edges (P2), then cells (bubble)
  std::map<std::array<int, 2>, int> edge_ids;
};

DofTables build_dof_tables(const Mesh& mesh, Family family) {
  DofTables t;
  const int dim = mesh.dim;
  const int nv = mesh.vertex_count();
  t.dofs_per_cell = basis_count(family, dim);
  t.dof_points = mesh.vertices;
  int next = nv;

  if (family == Family::P2) {
    for (int c = 0; c < mesh.cell_count(); ++c) {
      auto cv = mesh.cell(c);
      const int ne = (dim == 2) ? 3 : 6;
      for (int e = 0; e < ne; ++e) {
        const int* ev = (dim == 2) ? kTriEdges[e] : kTetEdges[e];
        std::array<int, 2> key{cv[ev[0]], cv[ev[1]]};
        if (key[0] > key[1]) std::swap(key[0], key[1]);
        if (t.edge_ids.emplace(key, next).second) {
          const Point& a = mesh.vertices[key[0]];
          const Point& b = mesh.vertices[key[1]];
          t.dof_points.push_back({0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]),
                                  0.5 * (a[2] + b[2])});
          ++next;
        }
      }
    }
  }
  const int cell_base = next;
  if (family == Family::P1Bubble) {
    for (int c = 0; c < mesh.cell_count(); ++c) {
      auto cv = mesh.cell(c);
      Point bc{0.0, 0.0, 0.0};
      for (int v : cv)
        for (int d = 0; d < 3; ++d) bc[d] += mesh.vertices[v][d] / (dim + 1);
      t.dof_points.push_back(bc);
    }
    next += mesh.cell_count();
  }
  t.n_scalar = next;

  t.cell_dofs.reserve(static_cast<size_t>(mesh.cell_count()) * t.dofs_per_cell);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    auto cv = mesh.cell(c);
    for (int i = 0; i <= dim; ++i) t.cell_dofs.push_back(cv[i]);
    if (family == Family::P2) {
      const int ne = (dim == 2) ? 3 : 6;
      for (int e = 0; e < ne; ++e) {
        const int* ev = (dim == 2) ? kTriEdges[e] : kTetEdges[e];
        std::array<int, 2> key{cv[ev[0]], cv[ev[1]]};
        if (key[0] > key[1]) std::swap(key[0], key[1]);
        t.cell_dofs.push_back(t.edge_ids.at(key));
      }
    } else if (family == Family::P1Bubble) {
      t.cell_dofs.push_back(cell_base + c);
    }
  }
  return t;
}

// Scalar dofs lying on tagged boundary facets (vertices, plus P2 edge
// midpoints of facet edges).
std::vector<char> boundary_dof_mask(const Mesh& mesh, const DofTables& t,
                                    Family family, BoundaryTag want,
                                    bool any_tag) {
  std::vector<char> mask(t.n_scalar, 0);
  for (const auto& [key, tag] : mesh.facet_tags) {
    if (!any_tag && tag != want) continue;
    std::vector<int> fv;
    for (int v : key)
      if (v >= 0) fv.push_back(v);
    for (int v : fv) mask[v] = 1;
    if (family == Family::P2) {
      for (size_t i = 0; i < fv.size(); ++i)
        for (size_t j = i + 1; j < fv.size(); ++j) {
          std::array<int, 2> ekey{fv[i], fv[j]};
          if (ekey[0] > ekey[1]) std::swap(ekey[0], ekey[1]);
          auto it = t.edge_ids.find(ekey);
          if (it != t.edge_ids.end()) mask[it->second] = 1;
        }
    }
  }
  return mask;
}

}  // namespace

FunctionSpace build_space(MeshPtr mesh, Family family, int components,
                          BcSpec bc) {
  if (!mesh) throw std::invalid_argument("build_space: null mesh");
  if (components < 1 || components > 3)
    throw std::invalid_argument("component count must be 1, 2, or 3");
  if (mesh->dim != 2 && mesh->dim != 3)
    throw std::invalid_argument("unsupported mesh dimension");
  if (bc == BcSpec::hydrostatic_velocity && mesh->dim != 3)
    throw std::invalid_argument("hydrostatic velocity space needs a 3D mesh");
  if (bc == BcSpec::hydrostatic_velocity &&
      !(mesh->periodic_x && mesh->periodic_y))
    throw std::invalid_argument(
        "hydrostatic velocity space needs a periodically identified mesh");

  FunctionSpace sp;
  sp.mesh = mesh;
  sp.family = family;
  sp.components = components;
  sp.bc = bc;

  DofTables t = build_dof_tables(*mesh, family);
  sp.n_scalar = t.n_scalar;
  sp.dofs_per_cell = t.dofs_per_cell;
  sp.cell_dofs = std::move(t.cell_dofs);
  sp.dof_points = t.dof_points;

  sp.dof_class.assign(sp.n_scalar, DofClass::free_dof);
  sp.master.assign(sp.n_scalar, -1);

  if (bc == BcSpec::stokes_dirichlet) {
    auto mask = boundary_dof_mask(*mesh, t, family, BoundaryTag::dirichlet,
                                  /*any_tag=*/true);
    for (int s = 0; s < sp.n_scalar; ++s)
      if (mask[s]) sp.dof_class[s] = DofClass::fixed;
  } else if (bc == BcSpec::hydrostatic_velocity) {
    auto mask = boundary_dof_mask(*mesh, t, family, BoundaryTag::bottom,
                                  /*any_tag=*/false);
    for (int s = 0; s < sp.n_scalar; ++s)
      if (mask[s]) sp.dof_class[s] = DofClass::fixed;
  }

  // Periodic identification on dof coordinates: a dof on a slave face maps
  // to the dof translated by every active period at once, so the closure
  // is chain-free by construction.
  if ((mesh->periodic_x || mesh->periodic_y) &&
      (bc == BcSpec::hydrostatic_velocity ||
       bc == BcSpec::surface_pressure_zero_mean)) {
    std::vector<int> order(sp.n_scalar);
    for (int i = 0; i < sp.n_scalar; ++i) order[i] = i;
    auto less = [&sp](int a, int b) {
      for (int d = 0; d < 3; ++d) {
        if (sp.dof_points[a][d] < sp.dof_points[b][d] - kGeomTol) return true;
        if (sp.dof_points[a][d] > sp.dof_points[b][d] + kGeomTol) return false;
      }
      return false;
    };
    std::sort(order.begin(), order.end(), less);
    auto find_dof = [&](const Point& p) -> int {
      int lo = 0, hi = sp.n_scalar;
      while (lo < hi) {
        const int mid = (lo + hi) / 2;
        const Point& q = sp.dof_points[order[mid]];
        int cmp = 0;
        for (int d = 0; d < 3; ++d) {
          if (q[d] < p[d] - kGeomTol) { cmp = -1; break; }
          if (q[d] > p[d] + kGeomTol) { cmp = 1; break; }
        }
        if (cmp < 0) lo = mid + 1;
        else if (cmp > 0) hi = mid;
        else return order[mid];
      }
      return -1;
    };
    for (int s = 0; s < sp.n_scalar; ++s) {
      const Point& p = sp.dof_points[s];
      Point q = p;
      bool slave = false;
      if (mesh->periodic_x && std::abs(p[0] - 1.0) < kGeomTol) {
        q[0] -= 1.0;
        slave = true;
      }
      if (mesh->periodic_y && std::abs(p[1] - 1.0) < kGeomTol) {
        q[1] -= 1.0;
        slave = true;
      }
      if (!slave) continue;
      const int m = find_dof(q);
      if (m < 0)
        throw std::runtime_error("periodic dof has no matching partner");
      if (sp.dof_class[s] == DofClass::fixed) continue;  // fixed wins
      sp.dof_class[s] = DofClass::slave;
      sp.master[s] = m;
    }
    // Masters of surviving slaves must be free.
    for (int s = 0; s < sp.n_scalar; ++s)
      if (sp.dof_class[s] == DofClass::slave &&
          sp.dof_class[sp.master[s]] != DofClass::free_dof)
        throw std::runtime_error("periodic master is constrained");
  }

  sp.free_index.assign(sp.n_scalar, -1);
  for (int s = 0; s < sp.n_scalar; ++s)
    if (sp.dof_class[s] == DofClass::free_dof)
      sp.free_index[s] = sp.n_free_scalar++;

  sp.zero_mean = (bc == BcSpec::surface_pressure_zero_mean);
  if (sp.zero_mean) {
    if (components != 1)
      throw std::invalid_argument("zero-mean spaces are scalar");
    sp.mean_row = Eigen::VectorXd::Zero(sp.n_free_scalar);
    const QuadratureRule& rule = simplex_rule(mesh->dim);
    std::vector<double> vals(sp.dofs_per_cell);
    for (int c = 0; c < mesh->cell_count(); ++c) {
      const double vol = mesh->cell_volume(c);
      auto dofs = sp.cell_scalar_dofs(c);
      for (int q = 0; q < rule.size(); ++q) {
        basis_values(family, mesh->dim, rule.points[q].data(), vals.data());
        for (int i = 0; i < sp.dofs_per_cell; ++i) {
          const int r = sp.reduced_scalar(dofs[i]);
          if (r >= 0) sp.mean_row[r] += vol * rule.weights[q] * vals[i];
        }
      }
    }
  }
  return sp;
}

Eigen::VectorXd interpolate(const FunctionSpace& space,
                            const FieldFunction& f) {
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(space.n_dofs_raw());
  const int bubble_base =
      (space.family == Family::P1Bubble)
          ? space.n_scalar - space.mesh->cell_count()
          : space.n_scalar;
  for (int s = 0; s < space.n_scalar; ++s) {
    if (s >= bubble_base) continue;  // bubble coefficients stay 0
    const Eigen::VectorXd v = f(space.dof_points[s]);
    if (v.size() != space.components)
      throw std::invalid_argument("field has wrong component count");
    for (int c = 0; c < space.components; ++c) {
      if (!std::isfinite(v[c]))
        throw std::runtime_error("field is not finite at a nodal point");
      raw[s * space.components + c] = v[c];
    }
  }
  return space.reduce(raw);
}

double interpolation_error(const FunctionSpace& space, const FieldFunction& f,
                           const FieldGradFunction* grad_f, ErrorNorm norm) {
  if (norm == ErrorNorm::H1 && grad_f == nullptr)
    throw std::invalid_argument("H1 interpolation error needs the gradient");
  const Eigen::VectorXd raw = space.expand(interpolate(space, f));
  const Mesh& mesh = *space.mesh;
  const QuadratureRule& rule = simplex_rule(mesh.dim);
  const int nbf = space.dofs_per_cell;
  std::vector<double> vals(nbf);
  std::vector<Eigen::Vector3d> grads(nbf);
  double acc = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    auto dofs = space.cell_scalar_dofs(c);
    for (int q = 0; q < rule.size(); ++q) {
      const double* b = rule.points[q].data();
      const Point x = g.map(b);
      basis_values(space.family, mesh.dim, b, vals.data());
      const Eigen::VectorXd fx = f(x);
      if (norm == ErrorNorm::L2) {
        for (int comp = 0; comp < space.components; ++comp) {
          double uh = 0.0;
          for (int i = 0; i < nbf; ++i)
            uh += vals[i] * raw[dofs[i] * space.components + comp];
          const double d = fx[comp] - uh;
          acc += g.volume * rule.weights[q] * d * d;
        }
      } else {
        // full H1 norm, matching the V-inner product K = M + A
        basis_gradients(space.family, mesh.dim, b, g.grad_bary, grads.data());
        const Eigen::MatrixXd gf = (*grad_f)(x);
        for (int comp = 0; comp < space.components; ++comp) {
          double uh = 0.0;
          Eigen::Vector3d gh = Eigen::Vector3d::Zero();
          for (int i = 0; i < nbf; ++i) {
            uh += vals[i] * raw[dofs[i] * space.components + comp];
            gh += grads[i] * raw[dofs[i] * space.components + comp];
          }
          const double dv = fx[comp] - uh;
          const Eigen::Vector3d d =
              gf.row(comp).transpose().head<3>() - gh;
          acc += g.volume * rule.weights[q] * (d.squaredNorm() + dv * dv);
        }
      }
    }
  }
  return std::sqrt(acc);
}

void eval_fe(const FunctionSpace& space, const Eigen::VectorXd& raw, int c,
             const double* bary, double* out) {
  const int nbf = space.dofs_per_cell;
  std::vector<double> vals(nbf);
  basis_values(space.family, space.mesh->dim, bary, vals.data());
  auto dofs = space.cell_scalar_dofs(c);
  for (int comp = 0; comp < space.components; ++comp) {
    double u = 0.0;
    for (int i = 0; i < nbf; ++i)
      u += vals[i] * raw[dofs[i] * space.components + comp];
    out[comp] = u;
  }
}

}  // namespace hstokes
