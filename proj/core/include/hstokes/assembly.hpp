// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/SparseCore>
#include <complex>
#include <memory>

#include "hstokes/fespace.hpp"
#include "hstokes/mesh.hpp"

namespace hstokes {

struct SparseOperator {
  Eigen::SparseMatrix<double> mat;
  bool symmetric = false;

  Eigen::Index rows() const { return mat.rows(); }
  Eigen::Index cols() const { return mat.cols(); }
  /// max |A_ij - A_ji| relative to max |A_ij|; 0 for empty matrices.
  double symmetry_defect() const;
};

/// M_ij = (phi_j, phi_i) on free dofs after constraint reduction.
SparseOperator assemble_mass(const FunctionSpace& space);

/// A_ij = (grad phi_j, grad phi_i) on free dofs.
SparseOperator assemble_stiffness(const FunctionSpace& space);

/// B_ki = -(div phi_i, psi_k), both spaces on the same 2D mesh.
SparseOperator assemble_divergence_2d(const FunctionSpace& v_space,
                                      const FunctionSpace& q_space);

/// Hydrostatic coupling B_ki = -(div_H phi_i, ~psi_k)_Omega where ~psi_k is
/// the z-constant extension of the surface pressure basis. On a prismatic
/// mesh the extension is piecewise linear per tet, so volumetric quadrature
/// is exact and equals -(div_H of the vertical average, psi_k)_G by Fubini.
SparseOperator assemble_divergence_hydrostatic(
    const FunctionSpace& v_space, const FunctionSpace& q_space,
    const PrismaticStructure& structure);

/// F_i = (f, phi_i) on free dofs. Complex-capable for resolvent residuals.
template <typename Scalar>
Eigen::VectorX<Scalar> assemble_load(
    const FunctionSpace& space,
    const std::function<Eigen::VectorX<Scalar>(const Point&)>& f);

extern template Eigen::VectorXd assemble_load<double>(
    const FunctionSpace&,
    const std::function<Eigen::VectorXd(const Point&)>&);
extern template Eigen::VectorXcd assemble_load<std::complex<double>>(
    const FunctionSpace&,
    const std::function<Eigen::VectorXcd(const Point&)>&);

/// All operators of one saddle problem. K = M + A is the V-inner-product
/// Gram matrix; mean_row = M_Q * ones is the zero-mean multiplier row.
struct SaddleSystem {
  std::shared_ptr<const FunctionSpace> velocity;
  std::shared_ptr<const FunctionSpace> pressure;
  Eigen::SparseMatrix<double> M, A, K, B, MQ;
  Eigen::VectorXd mean_row;

  Eigen::Index n_velocity() const { return M.rows(); }
  Eigen::Index n_pressure() const { return MQ.rows(); }
};

/// Assemble the full system; `structure` selects the hydrostatic coupling
/// and must be non-null iff the velocity mesh is 3D.
SaddleSystem assemble_system(std::shared_ptr<const FunctionSpace> velocity,
                             std::shared_ptr<const FunctionSpace> pressure,
                             const PrismaticStructure* structure = nullptr);

}  // namespace hstokes
