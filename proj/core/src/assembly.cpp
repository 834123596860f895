// SPDX-License-Identifier: Apache-2.0

#include "hstokes/assembly.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hstokes/quadrature.hpp"

namespace hstokes {

namespace {

using Triplet = Eigen::Triplet<double>;

// Insert a cell-local scalar block for every vector component.
void scatter_component_diagonal(const FunctionSpace& sp,
                                std::span<const int> dofs,
                                const Eigen::MatrixXd& local,
                                std::vector<Triplet>& out) {
  const int nbf = static_cast<int>(dofs.size());
  const int C = sp.components;
  for (int i = 0; i < nbf; ++i) {
    const int ri = sp.reduced_scalar(dofs[i]);
    if (ri < 0) continue;
    for (int j = 0; j < nbf; ++j) {
      const int rj = sp.reduced_scalar(dofs[j]);
      if (rj < 0) continue;
      for (int c = 0; c < C; ++c)
        out.emplace_back(ri * C + c, rj * C + c, local(i, j));
    }
  }
}

}  // namespace

double SparseOperator::symmetry_defect() const {
  if (mat.rows() != mat.cols() || mat.nonZeros() == 0) return 0.0;
  Eigen::SparseMatrix<double> d = mat - Eigen::SparseMatrix<double>(mat.transpose());
  double maxd = 0.0, maxv = 0.0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(d, k); it; ++it)
      maxd = std::max(maxd, std::abs(it.value()));
  for (int k = 0; k < mat.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat, k); it; ++it)
      maxv = std::max(maxv, std::abs(it.value()));
  return maxv > 0.0 ? maxd / maxv : 0.0;
}

SparseOperator assemble_mass(const FunctionSpace& sp) {
  const Mesh& mesh = *sp.mesh;
  const QuadratureRule& rule = simplex_rule(mesh.dim);
  const int nbf = sp.dofs_per_cell;
  std::vector<double> vals(nbf);
  Eigen::MatrixXd local(nbf, nbf);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(mesh.cell_count()) * nbf * nbf *
                sp.components);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const double vol = mesh.cell_volume(c);
    local.setZero();
    for (int q = 0; q < rule.size(); ++q) {
      basis_values(sp.family, mesh.dim, rule.points[q].data(), vals.data());
      const double w = vol * rule.weights[q];
      for (int i = 0; i < nbf; ++i)
        for (int j = 0; j < nbf; ++j) local(i, j) += w * vals[i] * vals[j];
    }
    scatter_component_diagonal(sp, sp.cell_scalar_dofs(c), local, trips);
  }
  SparseOperator op;
  op.mat.resize(sp.n_dofs_free(), sp.n_dofs_free());
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.symmetric = true;
  return op;
}

SparseOperator assemble_stiffness(const FunctionSpace& sp) {
  const Mesh& mesh = *sp.mesh;
  const QuadratureRule& rule = simplex_rule(mesh.dim);
  const int nbf = sp.dofs_per_cell;
  std::vector<Eigen::Vector3d> grads(nbf);
  Eigen::MatrixXd local(nbf, nbf);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(mesh.cell_count()) * nbf * nbf *
                sp.components);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    local.setZero();
    for (int q = 0; q < rule.size(); ++q) {
      basis_gradients(sp.family, mesh.dim, rule.points[q].data(), g.grad_bary,
                      grads.data());
      const double w = g.volume * rule.weights[q];
      for (int i = 0; i < nbf; ++i)
        for (int j = 0; j < nbf; ++j)
          local(i, j) += w * grads[i].dot(grads[j]);
    }
    scatter_component_diagonal(sp, sp.cell_scalar_dofs(c), local, trips);
  }
  SparseOperator op;
  op.mat.resize(sp.n_dofs_free(), sp.n_dofs_free());
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.symmetric = true;
  return op;
}

SparseOperator assemble_divergence_2d(const FunctionSpace& v_space,
                                      const FunctionSpace& q_space) {
  if (v_space.mesh.get() != q_space.mesh.get())
    throw std::invalid_argument("velocity and pressure meshes differ");
  if (v_space.mesh->dim != 2)
    throw std::invalid_argument("2D divergence needs a 2D mesh");
  const Mesh& mesh = *v_space.mesh;
  const QuadratureRule& rule = simplex_rule(2);
  const int nbv = v_space.dofs_per_cell;
  const int nbq = q_space.dofs_per_cell;
  const int C = v_space.components;
  std::vector<Eigen::Vector3d> vgrads(nbv);
  std::vector<double> qvals(nbq);
  std::vector<Triplet> trips;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    auto vdofs = v_space.cell_scalar_dofs(c);
    auto qdofs = q_space.cell_scalar_dofs(c);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nbq, nbv * C);
    for (int q = 0; q < rule.size(); ++q) {
      basis_gradients(v_space.family, 2, rule.points[q].data(), g.grad_bary,
                      vgrads.data());
      basis_values(q_space.family, 2, rule.points[q].data(), qvals.data());
      const double w = g.volume * rule.weights[q];
      for (int k = 0; k < nbq; ++k)
        for (int i = 0; i < nbv; ++i)
          for (int comp = 0; comp < C; ++comp)
            local(k, i * C + comp) -= w * qvals[k] * vgrads[i][comp];
    }
    for (int k = 0; k < nbq; ++k) {
      const int rk = q_space.reduced_scalar(qdofs[k]);
      if (rk < 0) continue;
      for (int i = 0; i < nbv; ++i) {
        const int ri = v_space.reduced_scalar(vdofs[i]);
        if (ri < 0) continue;
        for (int comp = 0; comp < C; ++comp)
          trips.emplace_back(rk, ri * C + comp, local(k, i * C + comp));
      }
    }
  }
  SparseOperator op;
  op.mat.resize(q_space.n_dofs_free(), v_space.n_dofs_free());
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.symmetric = false;
  return op;
}

SparseOperator assemble_divergence_hydrostatic(
    const FunctionSpace& v_space, const FunctionSpace& q_space,
    const PrismaticStructure& structure) {
  const Mesh& mesh = *v_space.mesh;
  if (mesh.dim != 3)
    throw std::invalid_argument("hydrostatic divergence needs a 3D mesh");
  if (static_cast<int>(structure.cell_to_surface.size()) != mesh.cell_count())
    throw std::invalid_argument(
        "mesh is not prismatic: surface extension would not be polynomial");
  const Mesh& surf = *q_space.mesh;
  const QuadratureRule& rule = simplex_rule(3);
  const int nbv = v_space.dofs_per_cell;
  const int C = v_space.components;
  if (C != 2)
    throw std::invalid_argument("hydrostatic velocity has 2 components");
  std::vector<Eigen::Vector3d> vgrads(nbv);
  std::vector<Triplet> trips;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    auto vdofs = v_space.cell_scalar_dofs(c);
    const int tri = structure.cell_to_surface[c];
    auto qdofs = q_space.cell_scalar_dofs(tri);
    const CellGeometry gs = cell_geometry(surf, tri);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(3, nbv * C);
    for (int q = 0; q < rule.size(); ++q) {
      basis_gradients(v_space.family, 3, rule.points[q].data(), g.grad_bary,
                      vgrads.data());
      const Point x = g.map(rule.points[q].data());
      // Surface P1 basis at the horizontal projection: the z-constant
      // extension, affine on this tet because the mesh is prismatic.
      double lam[3];
      {
        // barycentric coordinates of (x, y) in the parent triangle
        const Point& a = gs.verts[0];
        const Point& b = gs.verts[1];
        const Point& d = gs.verts[2];
        const double det = (b[0] - a[0]) * (d[1] - a[1]) -
                           (d[0] - a[0]) * (b[1] - a[1]);
        lam[1] = ((x[0] - a[0]) * (d[1] - a[1]) -
                  (d[0] - a[0]) * (x[1] - a[1])) / det;
        lam[2] = ((b[0] - a[0]) * (x[1] - a[1]) -
                  (x[0] - a[0]) * (b[1] - a[1])) / det;
        lam[0] = 1.0 - lam[1] - lam[2];
      }
      const double w = g.volume * rule.weights[q];
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < nbv; ++i)
          for (int comp = 0; comp < 2; ++comp)
            local(k, i * C + comp) -= w * lam[k] * vgrads[i][comp];
    }
    for (int k = 0; k < 3; ++k) {
      const int rk = q_space.reduced_scalar(qdofs[k]);
      if (rk < 0) continue;
      for (int i = 0; i < nbv; ++i) {
        const int ri = v_space.reduced_scalar(vdofs[i]);
        if (ri < 0) continue;
        for (int comp = 0; comp < 2; ++comp)
          trips.emplace_back(rk, ri * C + comp, local(k, i * C + comp));
      }
    }
  }
  SparseOperator op;
  op.mat.resize(q_space.n_dofs_free(), v_space.n_dofs_free());
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.symmetric = false;
  return op;
}

template <typename Scalar>
Eigen::VectorX<Scalar> assemble_load(
    const FunctionSpace& sp,
    const std::function<Eigen::VectorX<Scalar>(const Point&)>& f) {
  const Mesh& mesh = *sp.mesh;
  const QuadratureRule& rule = simplex_rule(mesh.dim);
  const int nbf = sp.dofs_per_cell;
  const int C = sp.components;
  std::vector<double> vals(nbf);
  Eigen::VectorX<Scalar> F = Eigen::VectorX<Scalar>::Zero(sp.n_dofs_free());
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    auto dofs = sp.cell_scalar_dofs(c);
    for (int q = 0; q < rule.size(); ++q) {
      const double* b = rule.points[q].data();
      basis_values(sp.family, mesh.dim, b, vals.data());
      const Eigen::VectorX<Scalar> fx = f(g.map(b));
      if (fx.size() != C)
        throw std::invalid_argument("load field has wrong component count");
      for (int comp = 0; comp < C; ++comp)
        if (!std::isfinite(std::abs(fx[comp])))
          throw std::runtime_error("load field is not finite");
      const double w = g.volume * rule.weights[q];
      for (int i = 0; i < nbf; ++i) {
        const int ri = sp.reduced_scalar(dofs[i]);
        if (ri < 0) continue;
        for (int comp = 0; comp < C; ++comp)
          F[ri * C + comp] += w * vals[i] * fx[comp];
      }
    }
  }
  return F;
}

template Eigen::VectorXd assemble_load<double>(
    const FunctionSpace&,
    const std::function<Eigen::VectorXd(const Point&)>&);
template Eigen::VectorXcd assemble_load<std::complex<double>>(
    const FunctionSpace&,
    const std::function<Eigen::VectorXcd(const Point&)>&);

SaddleSystem assemble_system(std::shared_ptr<const FunctionSpace> velocity,
                             std::shared_ptr<const FunctionSpace> pressure,
                             const PrismaticStructure* structure) {
  SaddleSystem sys;
  sys.velocity = velocity;
  sys.pressure = pressure;
  sys.M = assemble_mass(*velocity).mat;
  sys.A = assemble_stiffness(*velocity).mat;
  sys.K = sys.M + sys.A;
  if (velocity->mesh->dim == 3) {
    if (!structure)
      throw std::invalid_argument("3D system needs the prismatic structure");
    sys.B = assemble_divergence_hydrostatic(*velocity, *pressure, *structure)
                .mat;
  } else {
    sys.B = assemble_divergence_2d(*velocity, *pressure).mat;
  }
  sys.MQ = assemble_mass(*pressure).mat;
  if (!pressure->zero_mean)
    throw std::invalid_argument("pressure space must carry the zero-mean row");
  sys.mean_row = sys.MQ * Eigen::VectorXd::Ones(sys.MQ.rows());
  return sys;
}

}  // namespace hstokes
