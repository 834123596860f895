// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "hstokes/saddle.hpp"

namespace hstokes {

enum class Scheme { implicit_euler, bdf2 };

using ForcingFunction =
    std::function<Eigen::VectorXd(const Point&, double t)>;

struct SchemeSpec {
  Scheme scheme = Scheme::implicit_euler;
  double dt = 0.0;
  double t_end = 0.0;
  ForcingFunction forcing;  // evaluated at the new time level when present
};

/// Trajectory state. u_prev / u_prev2 hold the stepping history so a
/// restarted run reproduces a straight run bit for bit (BDF2 included);
/// p is the Lagrange multiplier of the latest step and is undefined at
/// t = 0, matching the t > 0 pressure theory.
struct EvolutionState {
  double t = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd u_prev;
  Eigen::VectorXd u_prev2;
  Eigen::VectorXd p;
  long step_count = 0;

  bool has_pressure() const { return p.size() > 0; }
};

/// Semi-discrete saddle evolution, one factorization per distinct velocity
/// block. BDF2 bootstraps its first macro step with two implicit-Euler
/// half steps of dt/2.
class Evolver {
 public:
  Evolver(const SaddleSystem& sys, SchemeSpec spec);

  EvolutionState initialize(const FieldFunction& u0) const;
  EvolutionState initialize(const Eigen::VectorXd& u0) const;
  EvolutionState initialize_load(const Eigen::VectorXd& load) const;

  void step(EvolutionState& state) const;

  /// Step to t_end, emitting snapshots at the sample times, which must be
  /// integer multiples of dt in (0, t_end].
  std::vector<EvolutionState> evolve(EvolutionState state,
                                     const std::vector<double>& samples) const;

  const SaddleSystem& system() const { return *sys_; }
  const SchemeSpec& spec() const { return spec_; }

 private:
  void advance(EvolutionState& state, const SaddleFactorization<double>& fact,
               double mass_coeff, double dt,
               const Eigen::VectorXd& history) const;

  const SaddleSystem* sys_;
  SchemeSpec spec_;
  std::unique_ptr<SaddleFactorization<double>> fact_main_;
  std::unique_ptr<SaddleFactorization<double>> fact_boot_;
  std::unique_ptr<SaddleFactorization<double>> fact_proj_;
};

}  // namespace hstokes
