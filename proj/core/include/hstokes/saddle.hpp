// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <complex>
#include <memory>
#include <optional>

#include "hstokes/assembly.hpp"

namespace hstokes {

using Complex = std::complex<double>;

/// Shift for the resolvent problem. The sector membership
/// lambda in Sigma_delta = { z != 0 : |arg z| < pi - delta } is checked
/// before every solve; lambda = 0 is admitted only with allow_zero (the
/// reduced operator is invertible for the hydrostatic and Dirichlet
/// Stokes cases).
struct ResolventShift {
  Complex lambda{1.0, 0.0};
  double delta = M_PI / 4.0;
  bool allow_zero = false;

  void validate() const;
};

template <typename Scalar>
struct SaddleSolution {
  Eigen::VectorX<Scalar> w;   // velocity coefficients
  Eigen::VectorX<Scalar> pi;  // pressure coefficients
  Scalar mean_multiplier{};
  double residual_momentum = 0.0;   // ||C w + B^T pi - f|| / ||f||
  double residual_constraint = 0.0; // ||B w + m mu|| / scale
  double constraint_inf = 0.0;      // ||B w||_inf
  double pressure_mean = 0.0;       // |m . pi| / measure(G)
};

/// Sparse LU of the bordered matrix [C, B^T, 0; B, 0, m; 0, m^T, 0].
/// Immutable after construction; concurrent solves are safe because each
/// solve works on its own vectors.
template <typename Scalar>
class SaddleFactorization {
 public:
  SaddleFactorization(const SaddleSystem& sys,
                      const Eigen::SparseMatrix<Scalar>& C);

  const SaddleSystem& system() const { return *sys_; }

  /// Solve for rhs (f on the velocity block, g on the pressure block).
  SaddleSolution<Scalar> solve(const Eigen::VectorX<Scalar>& f,
                               const Eigen::VectorX<Scalar>& g) const;

 private:
  const SaddleSystem* sys_;
  Eigen::Index nv_, nq_;
  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> lu_;
  Eigen::SparseMatrix<Scalar> bordered_;
};

extern template class SaddleFactorization<double>;
extern template class SaddleFactorization<Complex>;

/// Resolvent solve lambda (w, v) + a(w, v) + b(v, pi) = rhs with the
/// zero-mean row appended; rhs = (M g, 0) for solve_resolvent and a
/// pre-assembled load functional for solve_resolvent_load.
SaddleSolution<Complex> solve_resolvent(const SaddleSystem& sys,
                                        const ResolventShift& shift,
                                        const Eigen::VectorXcd& g);
SaddleSolution<Complex> solve_resolvent_load(const SaddleSystem& sys,
                                             const ResolventShift& shift,
                                             const Eigen::VectorXcd& load);

/// L2-orthogonal projection onto the discretely solenoidal space:
/// argmin ||u - u0||_M subject to B u = 0.
Eigen::VectorXd project_solenoidal(const SaddleSystem& sys,
                                   const Eigen::VectorXd& u0);
/// Same, from a pre-assembled load functional (f, phi_i).
Eigen::VectorXd project_solenoidal_load(const SaddleSystem& sys,
                                        const Eigen::VectorXd& load);

/// Constrained K-orthogonal (Ritz) projection onto the solenoidal space.
Eigen::VectorXd ritz_projection(const SaddleSystem& sys,
                                const Eigen::VectorXd& u);

struct InfSupResult {
  double beta = 0.0;
  int iterations = 0;
};

/// beta_h = sqrt of the smallest eigenvalue of (B K^-1 B^T) q = mu M_Q q
/// restricted to zero-mean pressures, by blocked inverse iteration on the
/// Schur complement with the factorized bordered system.
InfSupResult estimate_infsup(const SaddleSystem& sys, double tol = 1e-8,
                             int max_iterations = 500, unsigned seed = 12345);

/// Smallest eigenpair of a(v, v) relative to (v, v)_M on the discretely
/// solenoidal space; the returned vector is M-normalized. Used as the
/// exact scalar-recurrence reference for the time steppers.
struct DiscreteMode {
  double eigenvalue = 0.0;
  Eigen::VectorXd vector;
  int iterations = 0;
};
DiscreteMode discrete_smallest_mode(const SaddleSystem& sys,
                                    double tol = 1e-12,
                                    int max_iterations = 500,
                                    unsigned seed = 4321);

/// Smallest eigenvalue of the pencil P x = mu Q x for sparse SPD P
/// (inverse iteration with a sparse LU of P).
double smallest_generalized_eigenvalue(const Eigen::SparseMatrix<double>& P,
                                       const Eigen::SparseMatrix<double>& Q,
                                       double tol = 1e-10,
                                       int max_iterations = 2000,
                                       unsigned seed = 99);

}  // namespace hstokes
