// SPDX-License-Identifier: Apache-2.0

#include "hstokes/evolution.hpp"

#include <cmath>
#include <stdexcept>

#include "hstokes/assembly.hpp"

namespace hstokes {

namespace {
constexpr double kConstraintTol = 1e-9;
constexpr double kMeanTol = 1e-12;
}  // namespace

Evolver::Evolver(const SaddleSystem& sys, SchemeSpec spec)
    : sys_(&sys), spec_(std::move(spec)) {
  if (spec_.dt <= 0.0) throw std::invalid_argument("dt must be positive");
  if (spec_.t_end < 0.0) throw std::invalid_argument("t_end must be >= 0");
  const double steps = spec_.t_end / spec_.dt;
  if (spec_.t_end > 0.0 &&
      std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw std::invalid_argument("t_end must be an integer multiple of dt");

  Eigen::SparseMatrix<double> C;
  if (spec_.scheme == Scheme::implicit_euler) {
    C = (1.0 / spec_.dt) * sys_->M + sys_->A;
    fact_main_ = std::make_unique<SaddleFactorization<double>>(*sys_, C);
  } else {
    C = (1.5 / spec_.dt) * sys_->M + sys_->A;
    fact_main_ = std::make_unique<SaddleFactorization<double>>(*sys_, C);
    // implicit-Euler bootstrap at dt/2
    C = (2.0 / spec_.dt) * sys_->M + sys_->A;
    fact_boot_ = std::make_unique<SaddleFactorization<double>>(*sys_, C);
  }
  fact_proj_ = std::make_unique<SaddleFactorization<double>>(*sys_, sys_->M);
}

EvolutionState Evolver::initialize_load(const Eigen::VectorXd& load) const {
  EvolutionState st;
  st.t = 0.0;
  st.step_count = 0;
  auto sol =
      fact_proj_->solve(load, Eigen::VectorXd::Zero(sys_->n_pressure()));
  st.u = sol.w;
  if (sol.constraint_inf > 1e-10)
    throw std::runtime_error("initial projection violates the constraint");
  return st;
}

EvolutionState Evolver::initialize(const Eigen::VectorXd& u0) const {
  return initialize_load(sys_->M * u0);
}

EvolutionState Evolver::initialize(const FieldFunction& u0) const {
  return initialize_load(assemble_load<double>(*sys_->velocity, u0));
}

void Evolver::advance(EvolutionState& state,
                      const SaddleFactorization<double>& fact,
                      double mass_coeff, double dt,
                      const Eigen::VectorXd& history) const {
  Eigen::VectorXd rhs = sys_->M * (mass_coeff * history);
  const double t_new = state.t + dt;
  if (spec_.forcing) {
    const auto& fvec = spec_.forcing;
    FieldFunction at_t = [&fvec, t_new](const Point& p) {
      return fvec(p, t_new);
    };
    rhs += assemble_load<double>(*sys_->velocity, at_t);
  }
  auto sol = fact.solve(rhs, Eigen::VectorXd::Zero(sys_->n_pressure()));
  if (sol.constraint_inf > kConstraintTol)
    throw std::runtime_error("step violates discrete solenoidality");
  if (sol.pressure_mean > kMeanTol)
    throw std::runtime_error("step violates the pressure zero mean");
  state.u_prev2 = state.u_prev;
  state.u_prev = state.u;
  state.u = sol.w;
  state.p = sol.pi;
  state.t = t_new;
}

void Evolver::step(EvolutionState& state) const {
  const double dt = spec_.dt;
  if (spec_.scheme == Scheme::implicit_euler) {
    advance(state, *fact_main_, 1.0 / dt, dt, state.u);
    ++state.step_count;
    return;
  }
  if (state.step_count == 0) {
    // Two half steps; the history afterwards is (u at 0, u at dt).
    const Eigen::VectorXd u0 = state.u;
    advance(state, *fact_boot_, 2.0 / dt, dt / 2.0, state.u);
    advance(state, *fact_boot_, 2.0 / dt, dt / 2.0, state.u);
    state.u_prev = u0;
    state.u_prev2.resize(0);
    ++state.step_count;
    return;
  }
  const Eigen::VectorXd hist = 2.0 * state.u - 0.5 * state.u_prev;
  advance(state, *fact_main_, 1.0 / dt, dt, hist);
  ++state.step_count;
}

std::vector<EvolutionState> Evolver::evolve(
    EvolutionState state, const std::vector<double>& samples) const {
  const double dt = spec_.dt;
  const long last = std::lround(spec_.t_end / dt);
  const long start = std::lround(state.t / dt);
  if (std::abs(state.t - start * dt) > 1e-9 * std::max(1.0, state.t))
    throw std::invalid_argument("state time is not aligned with dt");
  std::vector<long> sample_steps;
  sample_steps.reserve(samples.size());
  for (double ts : samples) {
    const double k = ts / dt;
    const long ki = std::lround(k);
    if (ki <= start || ki > last ||
        std::abs(k - ki) > 1e-9 * std::max(1.0, k))
      throw std::invalid_argument(
          "sample time is not an integer multiple of dt in (t, t_end]");
    sample_steps.push_back(ki);
  }
  std::vector<EvolutionState> out;
  out.reserve(samples.size());
  for (long s = start + 1; s <= last; ++s) {
    step(state);
    for (long ks : sample_steps)
      if (ks == s) out.push_back(state);
  }
  return out;
}

}  // namespace hstokes
