// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

#include "hstokes/evolution.hpp"
#include "hstokes/fespace.hpp"

namespace hstokes {

// Reference solutions of u_t - Delta u + grad_H p = 0, div_H ubar = 0 on
// the periodic box G x (-D, 0) with du/dz = 0 on top and u = 0 on bottom.
// Per horizontal wavenumber k the flow diagonalizes over two vertical
// eigenbases:
//   free components (k = 0, or perpendicular to k):
//       cos(mu_j z), mu_j = (2j+1) pi / (2 D), j >= 0
//   component parallel to k (carries the pressure, integral constraint
//   int u dz = 0):
//       cos(omega_j z) - cos(theta_j),  omega_j = theta_j / D,
//       tan(theta_j) = theta_j, j >= 1
// with decay rates nu = 4 pi^2 |k|^2 + mu_j^2 (resp. + omega_j^2).

enum class ModeFamily { barotropic, perpendicular, parallel };
enum class Trig { cosine, sine };

/// j-th positive root of tan(theta) = theta (j >= 1), to machine accuracy.
double parallel_eigenvalue_theta(int j);

struct ModeSpec {
  ModeFamily family = ModeFamily::barotropic;
  std::array<int, 2> k{0, 0};
  int j = 0;               // vertical index (parallel: j >= 1)
  Trig trig = Trig::cosine;
  int direction = 0;       // barotropic only: 0 = e_x, 1 = e_y
  double amplitude = 1.0;
};

struct HydrostaticMode {
  ModeFamily family;
  std::array<int, 2> k;
  Trig trig;
  double dir_par = 0.0;   // weight on khat (parallel direction)
  double dir_perp = 0.0;  // weight on khat_perp; for k = 0 these are e_x/e_y
  int profile = -1;       // index into the profile table
  std::complex<double> scale{1.0, 0.0};
};

struct VerticalProfile {
  ModeFamily family;
  std::vector<int> j;
  std::vector<std::complex<double>> coef;
};

struct SelfCheckReport {
  double momentum_inf = 0.0;       // strong residual, FD in z
  double constraint_inf = 0.0;     // |div_H ubar|, quadrature in z
  double bc_bottom_inf = 0.0;      // |u(-D)|
  double pressure_recovery = 0.0;  // parallel-mode pressure identity, FD
};

class OracleSolution {
 public:
  static OracleSolution from_modes(double depth,
                                   std::span<const ModeSpec> specs);
  /// 0/1 checkerboard in (x, y) times the indicator of the upper half of
  /// the water column, in the x-direction; horizontal truncation at odd
  /// wavenumbers <= kmax_odd per axis, vertical truncation at jmax terms;
  /// the parallel part is projected onto the constraint mode by mode.
  static OracleSolution checkerboard_datum(double depth, int kmax_odd,
                                           int jmax);

  /// Static solution of the shifted problem: amplitudes /(lambda + nu).
  OracleSolution resolvent(std::complex<double> lambda) const;

  double depth() const { return depth_; }
  bool evolving() const { return evolving_; }
  const std::vector<HydrostaticMode>& modes() const { return modes_; }
  const std::vector<VerticalProfile>& profiles() const { return profiles_; }

  /// L2(Omega) norm at time t via Parseval over the modes.
  double l2_norm(double t) const;
  /// Max vertical wavenumber present (sets FD steps in the self check).
  double max_vertical_wavenumber() const;

 private:
  friend class OracleEvaluator;
  friend struct ModeEvolution;
  friend class OracleBuilder;
  double depth_ = 1.0;
  bool evolving_ = true;
  std::vector<VerticalProfile> profiles_;
  std::vector<HydrostaticMode> modes_;
};

/// Assembles OracleSolution objects piecewise (profiles then modes).
class OracleBuilder {
 public:
  explicit OracleBuilder(double depth, bool evolving = true) {
    sol_.depth_ = depth;
    sol_.evolving_ = evolving;
  }
  int add_profile(VerticalProfile p) {
    sol_.profiles_.push_back(std::move(p));
    return static_cast<int>(sol_.profiles_.size()) - 1;
  }
  void add_mode(HydrostaticMode m) { sol_.modes_.push_back(std::move(m)); }
  OracleSolution build() { return std::move(sol_); }

 private:
  OracleSolution sol_;
};

/// Evaluation of an OracleSolution at one fixed time: per-term decay
/// factors are precomputed and terms below relative 1e-16 are dropped.
class OracleEvaluator {
 public:
  OracleEvaluator(const OracleSolution& sol, double t);

  Eigen::Vector2cd velocity(const Point& p) const;
  Eigen::Vector2cd velocity_dt(const Point& p) const;
  Eigen::Matrix<std::complex<double>, 2, 3> velocity_gradient(
      const Point& p) const;
  /// Horizontal Laplacian of the velocity (exact Fourier factors).
  Eigen::Vector2cd velocity_laplacian_h(const Point& p) const;
  std::complex<double> pressure(double x, double y) const;
  Eigen::Vector2cd pressure_gradient_h(double x, double y) const;

 private:
  struct TermSet {
    ModeFamily family;
    std::vector<double> omega;           // vertical wavenumber per term
    std::vector<std::complex<double>> c;     // decayed coefficients
    std::vector<std::complex<double>> c_dt;  // coefficients of u_t
    std::complex<double> gamma_sum;      // pressure factor (parallel)
    std::complex<double> gamma_dt_sum;
  };
  struct ModeEval {
    std::array<int, 2> k;
    Trig trig;
    double dir_par, dir_perp;
    int set;
    std::complex<double> scale;  // includes horizontal decay
    std::complex<double> scale_dt_extra;  // -4 pi^2 |k|^2 * scale
  };
  double depth_;
  std::vector<TermSet> sets_;
  std::vector<ModeEval> modes_;
};

/// Strong-form residuals at `n_points` random interior sample points.
SelfCheckReport oracle_selfcheck(const OracleSolution& sol,
                                 std::span<const double> t_samples,
                                 int n_points = 100, unsigned seed = 7);

/// Evolve an arbitrary vertical profile of one horizontal mode: expand in
/// the family's eigenbasis (jmax terms, quadrature in z) and decay each
/// term. Returns the evolved profile and, for parallel modes, the pressure
/// amplitude paired with the swapped trig factor.
struct ModeEvolution {
  OracleSolution solution;  // single-k solution carrying the expansion
  std::function<std::complex<double>(double z, double t)> profile;
  std::function<std::complex<double>(double t)> pressure_amplitude;
};
ModeEvolution solve_mode(double depth, std::array<int, 2> k, ModeFamily family,
                         const std::function<double(double)>& initial_profile,
                         int jmax = 64, Trig trig = Trig::cosine);

// ---------------------------------------------------------------------
// Fine-mesh Taylor-Hood reference for the 2D Dirichlet Stokes problem.

struct Stokes2dReference {
  MeshPtr mesh;
  std::shared_ptr<const FunctionSpace> velocity;
  std::shared_ptr<const FunctionSpace> pressure;
  int n = 0;  // structured resolution
  struct Snapshot {
    double t = 0.0;
    Eigen::VectorXd u_raw;   // expanded velocity coefficients
    Eigen::VectorXd du_raw;  // scheme-stencil time derivative, expanded
    Eigen::VectorXd p_raw;
  };
  std::vector<Snapshot> snapshots;
  double self_difference = 0.0;  // L2 gap to the n/2 reference at t_end
  double dt = 0.0;

  int locate(const Point& p, double bary[4]) const;
  Eigen::Vector2d eval_velocity(const Point& p, int snap) const;
  Eigen::Vector2d eval_velocity_dt(const Point& p, int snap) const;
  Eigen::Matrix<double, 2, 3> eval_velocity_gradient(const Point& p,
                                                     int snap) const;
  double eval_pressure(const Point& p, int snap) const;
};

/// BDF2 Taylor-Hood run on the structured n_ref mesh with the resolution
/// audit against the n_ref/2 mesh baked into self_difference.
Stokes2dReference stokes2d_reference(const FieldFunction& u0, int n_ref,
                                     double dt_ref,
                                     std::span<const double> sample_times);

}  // namespace hstokes
