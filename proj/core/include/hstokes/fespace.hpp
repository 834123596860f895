// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "hstokes/mesh.hpp"

namespace hstokes {

enum class Family { P1, P1Bubble, P2 };
enum class BcSpec {
  none,
  stokes_dirichlet,           // fix every boundary dof (2D Stokes velocity)
  hydrostatic_velocity,       // fix dofs on the bottom, slave periodic faces
  surface_pressure_zero_mean  // periodic if the mesh is, mean via multiplier
};

enum class DofClass : unsigned char { free_dof, fixed, slave };

/// Scalar reference basis: values and barycentric-derivative chain rule.
int basis_count(Family family, int dim);
void basis_values(Family family, int dim, const double* bary, double* vals);
/// grads[i] = sum_k (d phi_i / d lambda_k) grad_bary[k]
void basis_gradients(Family family, int dim, const double* bary,
                     const Eigen::Vector3d grad_bary[4],
                     Eigen::Vector3d* grads);

/// Affine geometry of one cell: volume, physical barycentric gradients,
/// and the barycentric-to-physical map.
struct CellGeometry {
  double volume = 0.0;
  Eigen::Vector3d grad_bary[4];
  Point verts[4];
  int nverts = 0;
  Point map(const double* bary) const {
    Point p{0.0, 0.0, 0.0};
    for (int i = 0; i < nverts; ++i)
      for (int d = 0; d < 3; ++d) p[d] += bary[i] * verts[i][d];
    return p;
  }
};
CellGeometry cell_geometry(const Mesh& mesh, int c);

/// Nodal finite element space with constraint reduction baked into a
/// raw-scalar-dof classification (free / fixed / periodic slave). Vector
/// dofs are node-major: dof = scalar * components + comp; the free
/// numbering follows the same layout.
struct FunctionSpace {
  MeshPtr mesh;
  Family family = Family::P1;
  int components = 1;
  BcSpec bc = BcSpec::none;

  int n_scalar = 0;              // raw scalar dofs
  int dofs_per_cell = 0;         // scalar basis functions per cell
  std::vector<int> cell_dofs;    // stride dofs_per_cell
  std::vector<Point> dof_points; // per scalar dof

  std::vector<DofClass> dof_class;
  std::vector<int> master;       // resolved master for slaves, else -1
  std::vector<int> free_index;   // scalar -> free scalar index, else -1
  int n_free_scalar = 0;
  bool zero_mean = false;
  Eigen::VectorXd mean_row;      // integral of each reduced basis function

  int n_dofs_raw() const { return n_scalar * components; }
  int n_dofs_free() const { return n_free_scalar * components; }

  std::span<const int> cell_scalar_dofs(int c) const {
    return std::span<const int>(cell_dofs.data() + c * dofs_per_cell,
                                dofs_per_cell);
  }

  /// Reduced row/column of a raw scalar dof, or -1 when fixed.
  int reduced_scalar(int s) const {
    if (dof_class[s] == DofClass::slave) s = master[s];
    return free_index[s];
  }

  template <typename Scalar>
  Eigen::VectorX<Scalar> expand(const Eigen::VectorX<Scalar>& free) const {
    Eigen::VectorX<Scalar> raw = Eigen::VectorX<Scalar>::Zero(n_dofs_raw());
    for (int s = 0; s < n_scalar; ++s) {
      const int r = reduced_scalar(s);
      if (r < 0) continue;
      for (int c = 0; c < components; ++c)
        raw[s * components + c] = free[r * components + c];
    }
    return raw;
  }

  template <typename Scalar>
  Eigen::VectorX<Scalar> reduce(const Eigen::VectorX<Scalar>& raw) const {
    Eigen::VectorX<Scalar> out = Eigen::VectorX<Scalar>::Zero(n_dofs_free());
    for (int s = 0; s < n_scalar; ++s) {
      if (dof_class[s] != DofClass::free_dof) continue;
      for (int c = 0; c < components; ++c)
        out[free_index[s] * components + c] = raw[s * components + c];
    }
    return out;
  }
};

FunctionSpace build_space(MeshPtr mesh, Family family, int components,
                          BcSpec bc);

/// Vector-valued coordinate function with `components` entries.
using FieldFunction = std::function<Eigen::VectorXd(const Point&)>;
/// Gradient: components x 3 matrix, entry (c, d) = d f_c / d x_d.
using FieldGradFunction = std::function<Eigen::MatrixXd(const Point&)>;

/// Nodal interpolant (bubble coefficients 0), reduced to free dofs.
Eigen::VectorXd interpolate(const FunctionSpace& space,
                            const FieldFunction& f);

enum class ErrorNorm { L2, H1 };

/// || f - I_h f || by per-cell quadrature. grad_f may be null for L2.
double interpolation_error(const FunctionSpace& space, const FieldFunction& f,
                           const FieldGradFunction* grad_f, ErrorNorm norm);

/// Evaluate a FE function (raw coefficients) at a barycentric point of a
/// cell; out has `components` entries.
void eval_fe(const FunctionSpace& space, const Eigen::VectorXd& raw, int c,
             const double* bary, double* out);

}  // namespace hstokes
