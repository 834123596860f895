// SPDX-License-Identifier: Apache-2.0

#include "hstokes/saddle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>

namespace hstokes {

void ResolventShift::validate() const {
  if (lambda == Complex(0.0, 0.0)) {
    if (!allow_zero)
      throw std::invalid_argument(
          "shift 0 is outside the sector (set allow_zero for invertible A)");
    return;
  }
  if (delta <= 0.0 || delta >= M_PI / 2.0)
    throw std::invalid_argument("sector parameter delta must be in (0, pi/2)");
  if (std::abs(std::arg(lambda)) >= M_PI - delta)
    throw std::invalid_argument("shift outside the sector Sigma_delta");
}

template <typename Scalar>
SaddleFactorization<Scalar>::SaddleFactorization(
    const SaddleSystem& sys, const Eigen::SparseMatrix<Scalar>& C)
    : sys_(&sys), nv_(sys.n_velocity()), nq_(sys.n_pressure()) {
  if (C.rows() != nv_ || C.cols() != nv_)
    throw std::invalid_argument("velocity block has wrong dimensions");
  const Eigen::Index n = nv_ + nq_ + 1;
  std::vector<Eigen::Triplet<Scalar>> trips;
  trips.reserve(C.nonZeros() + 2 * sys.B.nonZeros() + 2 * nq_);
  for (int k = 0; k < C.outerSize(); ++k)
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(C, k); it;
         ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < sys.B.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.B, k); it; ++it) {
      trips.emplace_back(nv_ + it.row(), it.col(), Scalar(it.value()));
      trips.emplace_back(it.col(), nv_ + it.row(), Scalar(it.value()));
    }
  for (Eigen::Index k = 0; k < nq_; ++k) {
    const Scalar m(sys.mean_row[k]);
    trips.emplace_back(nv_ + k, n - 1, m);
    trips.emplace_back(n - 1, nv_ + k, m);
  }
  bordered_.resize(n, n);
  bordered_.setFromTriplets(trips.begin(), trips.end());
  bordered_.makeCompressed();
  lu_.compute(bordered_);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("saddle factorization breakdown: " +
                             lu_.lastErrorMessage());
}

template <typename Scalar>
SaddleSolution<Scalar> SaddleFactorization<Scalar>::solve(
    const Eigen::VectorX<Scalar>& f, const Eigen::VectorX<Scalar>& g) const {
  if (f.size() != nv_ || g.size() != nq_)
    throw std::invalid_argument("rhs block sizes mismatch");
  const Eigen::Index n = nv_ + nq_ + 1;
  Eigen::VectorX<Scalar> rhs = Eigen::VectorX<Scalar>::Zero(n);
  rhs.head(nv_) = f;
  rhs.segment(nv_, nq_) = g;
  Eigen::VectorX<Scalar> x = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("saddle solve failed");

  SaddleSolution<Scalar> sol;
  sol.w = x.head(nv_);
  sol.pi = x.segment(nv_, nq_);
  sol.mean_multiplier = x[n - 1];

  const Eigen::VectorX<Scalar> res = bordered_ * x - rhs;
  const double scale = std::max(rhs.norm(), 1e-300);
  sol.residual_momentum = res.head(nv_).norm() / scale;
  sol.residual_constraint = res.segment(nv_, nq_).norm() / scale;
  Eigen::VectorX<Scalar> bw = sys_->B.cast<Scalar>() * sol.w;
  sol.constraint_inf = bw.template lpNorm<Eigen::Infinity>();
  const double area = sys_->mean_row.sum();
  sol.pressure_mean =
      std::abs(sys_->mean_row.cast<Scalar>().dot(sol.pi)) / area;
  if (sol.residual_momentum > 1e-9 || sol.residual_constraint > 1e-9)
    throw std::runtime_error("saddle solve residual above 1e-9");
  return sol;
}

template class SaddleFactorization<double>;
template class SaddleFactorization<Complex>;

namespace {

Eigen::SparseMatrix<Complex> shifted_block(const SaddleSystem& sys,
                                           Complex lambda) {
  Eigen::SparseMatrix<Complex> C =
      lambda * sys.M.cast<Complex>() + sys.A.cast<Complex>();
  C.makeCompressed();
  return C;
}

}  // namespace

SaddleSolution<Complex> solve_resolvent(const SaddleSystem& sys,
                                        const ResolventShift& shift,
                                        const Eigen::VectorXcd& g) {
  return solve_resolvent_load(sys, shift, sys.M.cast<Complex>() * g);
}

SaddleSolution<Complex> solve_resolvent_load(const SaddleSystem& sys,
                                             const ResolventShift& shift,
                                             const Eigen::VectorXcd& load) {
  shift.validate();
  SaddleFactorization<Complex> fact(sys, shifted_block(sys, shift.lambda));
  return fact.solve(load, Eigen::VectorXcd::Zero(sys.n_pressure()));
}

Eigen::VectorXd project_solenoidal(const SaddleSystem& sys,
                                   const Eigen::VectorXd& u0) {
  return project_solenoidal_load(sys, sys.M * u0);
}

Eigen::VectorXd project_solenoidal_load(const SaddleSystem& sys,
                                        const Eigen::VectorXd& load) {
  SaddleFactorization<double> fact(sys, sys.M);
  return fact.solve(load, Eigen::VectorXd::Zero(sys.n_pressure())).w;
}

Eigen::VectorXd ritz_projection(const SaddleSystem& sys,
                                const Eigen::VectorXd& u) {
  SaddleFactorization<double> fact(sys, sys.K);
  return fact.solve(sys.K * u, Eigen::VectorXd::Zero(sys.n_pressure())).w;
}

InfSupResult estimate_infsup(const SaddleSystem& sys, double tol,
                             int max_iterations, unsigned seed) {
  const Eigen::Index nq = sys.n_pressure();
  if (nq < 2) throw std::invalid_argument("pressure space too small");
  SaddleFactorization<double> fact(sys, sys.K);

  const Eigen::VectorXd& m = sys.mean_row;  // = M_Q * ones
  const double mass = m.sum();
  auto deflate = [&](Eigen::VectorXd& q) {
    q.array() -= m.dot(q) / mass;  // M_Q-orthogonality to constants
  };
  // y = S^{-1} r on the zero-mean subspace via one bordered solve.
  auto schur_inverse = [&](const Eigen::VectorXd& r) {
    auto sol = fact.solve(Eigen::VectorXd::Zero(sys.n_velocity()), -r);
    return sol.pi;
  };

  const int p = static_cast<int>(std::min<Eigen::Index>(4, nq - 1));
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd X(nq, p);
  for (Eigen::Index i = 0; i < nq; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = dist(rng);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd c = X.col(j);
    deflate(c);
    X.col(j) = c;
  }

  double mu = 0.0, mu_prev = -1.0;
  int it = 0;
  for (; it < max_iterations; ++it) {
    Eigen::MatrixXd R(nq, p), Y(nq, p);
    for (int j = 0; j < p; ++j) R.col(j) = sys.MQ * X.col(j);
    for (int j = 0; j < p; ++j) {
      Eigen::VectorXd y = schur_inverse(R.col(j));
      deflate(y);
      Y.col(j) = y;
    }
    // Rayleigh-Ritz in the raw basis: S Y = M_Q X by construction.
    Eigen::MatrixXd Shat = Y.transpose() * R;
    Shat = 0.5 * (Shat + Shat.transpose()).eval();
    Eigen::MatrixXd Mhat = Y.transpose() * (sys.MQ * Y);
    Mhat = 0.5 * (Mhat + Mhat.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Shat, Mhat);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("inf-sup Ritz step failed");
    mu = es.eigenvalues()[0];
    Eigen::MatrixXd Z = Y * es.eigenvectors();
    for (int j = 0; j < p; ++j) {
      Eigen::VectorXd c = Z.col(j);
      const double nrm = std::sqrt(c.dot(sys.MQ * c));
      X.col(j) = c / nrm;
    }
    if (mu_prev > 0.0 && std::abs(mu - mu_prev) <= tol * std::abs(mu)) {
      ++it;
      break;
    }
    mu_prev = mu;
  }
  if (it >= max_iterations)
    throw std::runtime_error("inf-sup iteration budget exhausted");
  if (mu <= 0.0) throw std::runtime_error("inf-sup eigenvalue non-positive");
  return {std::sqrt(mu), it};
}

DiscreteMode discrete_smallest_mode(const SaddleSystem& sys, double tol,
                                    int max_iterations, unsigned seed) {
  SaddleFactorization<double> fact(sys, sys.A);
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::VectorXd v(sys.n_velocity());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  // start on the constraint manifold
  v = fact.solve(sys.M * v, Eigen::VectorXd::Zero(sys.n_pressure())).w;
  double nu = 0.0, nu_prev = -1.0;
  int it = 0;
  for (; it < max_iterations; ++it) {
    v /= std::sqrt(v.dot(sys.M * v));
    Eigen::VectorXd w =
        fact.solve(sys.M * v, Eigen::VectorXd::Zero(sys.n_pressure())).w;
    nu = w.dot(sys.A * w) / w.dot(sys.M * w);
    v = w;
    if (nu_prev > 0.0 && std::abs(nu - nu_prev) <= tol * nu) {
      ++it;
      break;
    }
    nu_prev = nu;
  }
  if (it >= max_iterations)
    throw std::runtime_error("eigenmode iteration budget exhausted");
  v /= std::sqrt(v.dot(sys.M * v));
  return {nu, v, it};
}

double smallest_generalized_eigenvalue(const Eigen::SparseMatrix<double>& P,
                                       const Eigen::SparseMatrix<double>& Q,
                                       double tol, int max_iterations,
                                       unsigned seed) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::SparseMatrix<double> Pc = P;
  Pc.makeCompressed();
  lu.compute(Pc);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("pencil factorization failed");
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::VectorXd x(P.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = dist(rng);
  double mu = 0.0, mu_prev = -1.0;
  for (int it = 0; it < max_iterations; ++it) {
    x /= x.norm();
    const Eigen::VectorXd y = lu.solve(Q * x);
    mu = y.dot(P * y) / y.dot(Q * y);
    x = y;
    if (mu_prev > 0.0 && std::abs(mu - mu_prev) <= tol * std::abs(mu))
      return mu;
    mu_prev = mu;
  }
  return mu;
}

}  // namespace hstokes
