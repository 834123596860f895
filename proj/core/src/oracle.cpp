// SPDX-License-Identifier: Apache-2.0

#include "hstokes/oracle.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "hstokes/assembly.hpp"
#include "hstokes/quadrature.hpp"

namespace hstokes {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
using Cd = std::complex<double>;

double sq(double x) { return x * x; }

// Vertical wavenumber of term j in a family.
double vertical_omega(ModeFamily fam, int j, double depth) {
  if (fam == ModeFamily::parallel) return parallel_eigenvalue_theta(j) / depth;
  return (2.0 * j + 1.0) * M_PI / (2.0 * depth);
}

// Constant shift of the parallel basis: cos(omega z) - cos(theta).
double basis_shift(ModeFamily fam, double omega, double depth) {
  return fam == ModeFamily::parallel ? std::cos(omega * depth) : 0.0;
}

// Squared L2(-D,0) norm of one vertical basis function.
double basis_norm2(ModeFamily fam, double omega, double depth) {
  if (fam == ModeFamily::parallel) {
    const double s = std::sin(omega * depth);
    return 0.5 * depth * s * s;
  }
  return 0.5 * depth;
}

double horizontal_sigma(const std::array<int, 2>& k) {
  return 4.0 * M_PI * M_PI * (sq(double(k[0])) + sq(double(k[1])));
}

void mode_directions(const std::array<int, 2>& k, Eigen::Vector2d& par,
                     Eigen::Vector2d& perp) {
  if (k[0] == 0 && k[1] == 0) {
    par = Eigen::Vector2d(1.0, 0.0);
    perp = Eigen::Vector2d(0.0, 1.0);
    return;
  }
  const double len = std::sqrt(sq(double(k[0])) + sq(double(k[1])));
  par = Eigen::Vector2d(k[0] / len, k[1] / len);
  perp = Eigen::Vector2d(-k[1] / len, k[0] / len);
}

void validate_spec(const ModeSpec& s) {
  const bool kzero = (s.k[0] == 0 && s.k[1] == 0);
  switch (s.family) {
    case ModeFamily::barotropic:
      if (!kzero)
        throw std::invalid_argument("barotropic modes have k = 0");
      if (s.j < 0) throw std::invalid_argument("vertical index must be >= 0");
      if (s.direction != 0 && s.direction != 1)
        throw std::invalid_argument("barotropic direction is 0 or 1");
      break;
    case ModeFamily::perpendicular:
      if (kzero)
        throw std::invalid_argument("perpendicular modes need k != 0");
      if (s.j < 0) throw std::invalid_argument("vertical index must be >= 0");
      break;
    case ModeFamily::parallel:
      if (kzero) throw std::invalid_argument("parallel modes need k != 0");
      if (s.j < 1)
        throw std::invalid_argument("parallel vertical index starts at 1");
      break;
  }
}

}  // namespace

double parallel_eigenvalue_theta(int j) {
  if (j < 1) throw std::invalid_argument("parallel index starts at 1");
  // Fixed point theta = j pi + atan(theta), then Newton polish on
  // f = tan(theta) - theta.
  double th = j * M_PI + std::atan(j * M_PI + 1.0);
  for (int it = 0; it < 50; ++it) {
    const double next = j * M_PI + std::atan(th);
    if (std::abs(next - th) < 1e-15 * th) {
      th = next;
      break;
    }
    th = next;
  }
  for (int it = 0; it < 4; ++it) {
    const double t = std::tan(th);
    th -= (t - th) / (t * t);
  }
  return th;
}

OracleSolution OracleSolution::from_modes(double depth,
                                          std::span<const ModeSpec> specs) {
  if (depth <= 0.0) throw std::invalid_argument("depth must be positive");
  OracleSolution sol;
  sol.depth_ = depth;
  sol.evolving_ = true;
  for (const ModeSpec& s : specs) {
    validate_spec(s);
    VerticalProfile prof;
    prof.family = s.family;
    prof.j = {s.j};
    prof.coef = {Cd(1.0, 0.0)};
    sol.profiles_.push_back(std::move(prof));

    HydrostaticMode m;
    m.family = s.family;
    m.k = s.k;
    m.trig = s.trig;
    if (s.family == ModeFamily::parallel) {
      m.dir_par = 1.0;
      m.dir_perp = 0.0;
    } else if (s.family == ModeFamily::perpendicular) {
      m.dir_par = 0.0;
      m.dir_perp = 1.0;
    } else {
      m.dir_par = s.direction == 0 ? 1.0 : 0.0;
      m.dir_perp = s.direction == 1 ? 1.0 : 0.0;
    }
    m.profile = static_cast<int>(sol.profiles_.size()) - 1;
    m.scale = Cd(s.amplitude, 0.0);
    sol.modes_.push_back(m);
  }
  return sol;
}

OracleSolution OracleSolution::checkerboard_datum(double depth, int kmax_odd,
                                                  int jmax) {
  if (kmax_odd < 1 || kmax_odd % 2 == 0)
    throw std::invalid_argument("kmax_odd must be a positive odd integer");
  if (jmax < 2) throw std::invalid_argument("jmax must be >= 2");
  OracleSolution sol;
  sol.depth_ = depth;
  sol.evolving_ = true;

  // psi(z) = indicator(z > -D/2); free-basis and parallel-basis expansions.
  VerticalProfile free_prof;
  free_prof.family = ModeFamily::perpendicular;
  for (int j = 0; j < jmax; ++j) {
    const double mu = vertical_omega(ModeFamily::perpendicular, j, depth);
    const double inner = std::sin(mu * depth / 2.0) / mu;
    free_prof.j.push_back(j);
    free_prof.coef.push_back(Cd(inner / (0.5 * depth), 0.0));
  }
  VerticalProfile par_prof;
  par_prof.family = ModeFamily::parallel;
  for (int j = 1; j <= jmax; ++j) {
    const double th = parallel_eigenvalue_theta(j);
    const double om = th / depth;
    const double inner = std::sin(om * depth / 2.0) / om -
                         0.5 * depth * std::cos(th);
    const double nrm2 = 0.5 * depth * sq(std::sin(th));
    par_prof.j.push_back(j);
    par_prof.coef.push_back(Cd(inner / nrm2, 0.0));
  }
  sol.profiles_.push_back(std::move(free_prof));
  sol.profiles_.push_back(std::move(par_prof));
  const int kFree = 0, kPar = 1;

  // Barotropic half: (1/2) psi(z) e_x.
  {
    HydrostaticMode m;
    m.family = ModeFamily::barotropic;
    m.k = {0, 0};
    m.trig = Trig::cosine;
    m.dir_par = 1.0;  // e_x
    m.dir_perp = 0.0;
    m.profile = kFree;
    m.scale = Cd(0.5, 0.0);
    sol.modes_.push_back(m);
  }
  // sign checkerboard / 2: sum over odd (m, n) of (8 / pi^2 m n)
  //   sin(2 pi m x) sin(2 pi n y)
  // = sum 4/(pi^2 m n) [cos(2 pi (m, -n).x) - cos(2 pi (m, n).x)].
  for (int m = 1; m <= kmax_odd; m += 2)
    for (int n = 1; n <= kmax_odd; n += 2) {
      const double c = 4.0 / (M_PI * M_PI * m * n);
      const std::array<int, 2> kplus{m, n}, kminus{m, -n};
      // e_x = (k1/|k|) khat + (-k2/|k|) khat_perp
      for (auto [k, s] : {std::pair{kminus, c}, std::pair{kplus, -c}}) {
        Eigen::Vector2d par, perp;
        mode_directions(k, par, perp);
        const double wpar = par.x();    // e_x . khat
        const double wperp = perp.x();  // e_x . khat_perp
        if (std::abs(s * wpar) > 1e-15) {
          HydrostaticMode mm;
          mm.family = ModeFamily::parallel;
          mm.k = k;
          mm.trig = Trig::cosine;
          mm.dir_par = 1.0;
          mm.dir_perp = 0.0;
          mm.profile = kPar;
          mm.scale = Cd(s * wpar, 0.0);
          sol.modes_.push_back(mm);
        }
        if (std::abs(s * wperp) > 1e-15) {
          HydrostaticMode mm;
          mm.family = ModeFamily::perpendicular;
          mm.k = k;
          mm.trig = Trig::cosine;
          mm.dir_par = 0.0;
          mm.dir_perp = 1.0;
          mm.profile = kFree;
          mm.scale = Cd(s * wperp, 0.0);
          sol.modes_.push_back(mm);
        }
      }
    }
  return sol;
}

OracleSolution OracleSolution::resolvent(Cd lambda) const {
  OracleSolution out;
  out.depth_ = depth_;
  out.evolving_ = false;
  for (const HydrostaticMode& m : modes_) {
    const VerticalProfile& p = profiles_[m.profile];
    const double sigma = horizontal_sigma(m.k);
    VerticalProfile np;
    np.family = p.family;
    np.j = p.j;
    np.coef.resize(p.coef.size());
    for (size_t i = 0; i < p.j.size(); ++i) {
      const double om = vertical_omega(p.family, p.j[i], depth_);
      const double nu = sigma + om * om;
      np.coef[i] = p.coef[i] / (lambda + nu);
    }
    out.profiles_.push_back(std::move(np));
    HydrostaticMode nm = m;
    nm.profile = static_cast<int>(out.profiles_.size()) - 1;
    out.modes_.push_back(nm);
  }
  return out;
}

double OracleSolution::l2_norm(double t) const {
  double acc = 0.0;
  for (const HydrostaticMode& m : modes_) {
    const VerticalProfile& p = profiles_[m.profile];
    const double sigma = horizontal_sigma(m.k);
    const bool kzero = (m.k[0] == 0 && m.k[1] == 0);
    const double trig2 = kzero ? 1.0 : 0.5;
    const double dir2 = sq(m.dir_par) + sq(m.dir_perp);
    double vert = 0.0;
    for (size_t i = 0; i < p.j.size(); ++i) {
      const double om = vertical_omega(p.family, p.j[i], depth_);
      const double decay =
          evolving_ ? std::exp(-(sigma + om * om) * t) : 1.0;
      vert += std::norm(p.coef[i] * decay) * basis_norm2(p.family, om, depth_);
    }
    acc += std::norm(m.scale) * trig2 * dir2 * vert;
  }
  return std::sqrt(acc);
}

double OracleSolution::max_vertical_wavenumber() const {
  double w = 0.0;
  for (const VerticalProfile& p : profiles_)
    for (int j : p.j)
      w = std::max(w, vertical_omega(p.family, j, depth_));
  return w;
}

OracleEvaluator::OracleEvaluator(const OracleSolution& sol, double t)
    : depth_(sol.depth_) {
  sets_.reserve(sol.profiles_.size());
  for (const VerticalProfile& p : sol.profiles_) {
    TermSet s;
    s.family = p.family;
    s.gamma_sum = Cd(0.0, 0.0);
    s.gamma_dt_sum = Cd(0.0, 0.0);
    for (size_t i = 0; i < p.j.size(); ++i) {
      const double om = vertical_omega(p.family, p.j[i], sol.depth_);
      const double kappa = om * om;
      const double decay = sol.evolving_ ? std::exp(-kappa * t) : 1.0;
      const Cd c = p.coef[i] * decay;
      s.omega.push_back(om);
      s.c.push_back(c);
      s.c_dt.push_back(sol.evolving_ ? -kappa * c : Cd(0.0, 0.0));
      if (p.family == ModeFamily::parallel) {
        const double gamma = -kappa * std::cos(om * sol.depth_);
        s.gamma_sum += c * gamma;
        s.gamma_dt_sum += (sol.evolving_ ? -kappa * c : Cd(0.0)) * gamma;
      }
    }
    sets_.push_back(std::move(s));
  }
  modes_.reserve(sol.modes_.size());
  for (const HydrostaticMode& m : sol.modes_) {
    ModeEval e;
    e.k = m.k;
    e.trig = m.trig;
    e.dir_par = m.dir_par;
    e.dir_perp = m.dir_perp;
    e.set = m.profile;
    const double sigma = horizontal_sigma(m.k);
    const double decay = sol.evolving_ ? std::exp(-sigma * t) : 1.0;
    e.scale = m.scale * decay;
    e.scale_dt_extra = sol.evolving_ ? -sigma * e.scale : Cd(0.0, 0.0);
    if (std::abs(e.scale) < 1e-300) continue;
    modes_.push_back(e);
  }
}

Eigen::Vector2cd OracleEvaluator::velocity(const Point& p) const {
  Eigen::Vector2cd u = Eigen::Vector2cd::Zero();
  for (const ModeEval& m : modes_) {
    const TermSet& s = sets_[m.set];
    Cd vert(0.0, 0.0);
    for (size_t i = 0; i < s.omega.size(); ++i)
      vert += s.c[i] * (std::cos(s.omega[i] * p[2]) -
                        basis_shift(s.family, s.omega[i], depth_));
    const double phase = kTwoPi * (m.k[0] * p[0] + m.k[1] * p[1]);
    const double trig =
        m.trig == Trig::cosine ? std::cos(phase) : std::sin(phase);
    Eigen::Vector2d par, perp;
    mode_directions(m.k, par, perp);
    const Eigen::Vector2d dir = m.dir_par * par + m.dir_perp * perp;
    const Cd f = m.scale * trig * vert;
    u[0] += f * dir[0];
    u[1] += f * dir[1];
  }
  return u;
}

Eigen::Vector2cd OracleEvaluator::velocity_dt(const Point& p) const {
  Eigen::Vector2cd u = Eigen::Vector2cd::Zero();
  for (const ModeEval& m : modes_) {
    const TermSet& s = sets_[m.set];
    Cd vert(0.0, 0.0), vert_dt(0.0, 0.0);
    for (size_t i = 0; i < s.omega.size(); ++i) {
      const double b = std::cos(s.omega[i] * p[2]) -
                       basis_shift(s.family, s.omega[i], depth_);
      vert += s.c[i] * b;
      vert_dt += s.c_dt[i] * b;
    }
    const double phase = kTwoPi * (m.k[0] * p[0] + m.k[1] * p[1]);
    const double trig =
        m.trig == Trig::cosine ? std::cos(phase) : std::sin(phase);
    Eigen::Vector2d par, perp;
    mode_directions(m.k, par, perp);
    const Eigen::Vector2d dir = m.dir_par * par + m.dir_perp * perp;
    const Cd f = (m.scale * vert_dt + m.scale_dt_extra * vert) * trig;
    u[0] += f * dir[0];
    u[1] += f * dir[1];
  }
  return u;
}

Eigen::Matrix<Cd, 2, 3> OracleEvaluator::velocity_gradient(
    const Point& p) const {
  Eigen::Matrix<Cd, 2, 3> g = Eigen::Matrix<Cd, 2, 3>::Zero();
  for (const ModeEval& m : modes_) {
    const TermSet& s = sets_[m.set];
    Cd vert(0.0, 0.0), vert_dz(0.0, 0.0);
    for (size_t i = 0; i < s.omega.size(); ++i) {
      vert += s.c[i] * (std::cos(s.omega[i] * p[2]) -
                        basis_shift(s.family, s.omega[i], depth_));
      vert_dz += s.c[i] * (-s.omega[i] * std::sin(s.omega[i] * p[2]));
    }
    const double phase = kTwoPi * (m.k[0] * p[0] + m.k[1] * p[1]);
    const double trig =
        m.trig == Trig::cosine ? std::cos(phase) : std::sin(phase);
    const double dtrig =
        m.trig == Trig::cosine ? -std::sin(phase) : std::cos(phase);
    Eigen::Vector2d par, perp;
    mode_directions(m.k, par, perp);
    const Eigen::Vector2d dir = m.dir_par * par + m.dir_perp * perp;
    for (int c = 0; c < 2; ++c) {
      g(c, 0) += m.scale * dtrig * kTwoPi * m.k[0] * vert * dir[c];
      g(c, 1) += m.scale * dtrig * kTwoPi * m.k[1] * vert * dir[c];
      g(c, 2) += m.scale * trig * vert_dz * dir[c];
    }
  }
  return g;
}

Eigen::Vector2cd OracleEvaluator::velocity_laplacian_h(const Point& p) const {
  Eigen::Vector2cd u = Eigen::Vector2cd::Zero();
  for (const ModeEval& m : modes_) {
    const TermSet& s = sets_[m.set];
    Cd vert(0.0, 0.0);
    for (size_t i = 0; i < s.omega.size(); ++i)
      vert += s.c[i] * (std::cos(s.omega[i] * p[2]) -
                        basis_shift(s.family, s.omega[i], depth_));
    const double phase = kTwoPi * (m.k[0] * p[0] + m.k[1] * p[1]);
    const double trig =
        m.trig == Trig::cosine ? std::cos(phase) : std::sin(phase);
    Eigen::Vector2d par, perp;
    mode_directions(m.k, par, perp);
    const Eigen::Vector2d dir = m.dir_par * par + m.dir_perp * perp;
    const Cd f = -horizontal_sigma(m.k) * m.scale * trig * vert;
    u[0] += f * dir[0];
    u[1] += f * dir[1];
  }
  return u;
}

std::complex<double> OracleEvaluator::pressure(double x, double y) const {
  Cd p(0.0, 0.0);
  for (const ModeEval& m : modes_) {
    const TermSet& s = sets_[m.set];
    if (s.family != ModeFamily::parallel) continue;
    const double klen =
        std::sqrt(sq(double(m.k[0])) + sq(double(m.k[1])));
    const double phase = kTwoPi * (m.k[0] * x + m.k[1] * y);
    const double swapped =
        m.trig == Trig::cosine ? std::sin(phase) : -std::cos(phase);
    p += m.scale * s.gamma_sum / (kTwoPi * klen) * swapped;
  }
  return p;
}

Eigen::Vector2cd OracleEvaluator::pressure_gradient_h(double x,
                                                      double y) const {
  Eigen::Vector2cd g = Eigen::Vector2cd::Zero();
  for (const ModeEval& m : modes_) {
    const TermSet& s = sets_[m.set];
    if (s.family != ModeFamily::parallel) continue;
    const double klen =
        std::sqrt(sq(double(m.k[0])) + sq(double(m.k[1])));
    const double phase = kTwoPi * (m.k[0] * x + m.k[1] * y);
    // d/dx of the swapped trig factor
    const double dswap =
        m.trig == Trig::cosine ? std::cos(phase) : std::sin(phase);
    const Cd f = m.scale * s.gamma_sum / (kTwoPi * klen) * dswap * kTwoPi;
    g[0] += f * m.k[0];
    g[1] += f * m.k[1];
  }
  return g;
}

SelfCheckReport oracle_selfcheck(const OracleSolution& sol,
                                 std::span<const double> t_samples,
                                 int n_points, unsigned seed) {
  SelfCheckReport rep;
  const double D = sol.depth();
  const double wmax = std::max(sol.max_vertical_wavenumber(), 1.0);
  const double h = 0.025 / wmax;  // 6th-order stencil, trunc ~ roundoff
  static const double c7[7] = {2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0};

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  std::uniform_real_distribution<double> uz(-0.95 * D, -0.05 * D);

  // z-quadrature for the vertical average.
  std::vector<double> gx, gw;
  gauss_legendre(48, -D, 0.0, gx, gw);

  for (double t : t_samples) {
    OracleEvaluator ev(sol, t);
    for (int s = 0; s < n_points; ++s) {
      const double x = ux(rng), y = ux(rng), z = uz(rng);
      // u_zz by the 7-point stencil (basis formulas extend smoothly).
      Eigen::Vector2cd uzz = Eigen::Vector2cd::Zero();
      for (int i = -3; i <= 3; ++i)
        uzz += c7[i + 3] * ev.velocity({x, y, z + i * h});
      uzz /= 180.0 * h * h;
      const Eigen::Vector2cd res = ev.velocity_dt({x, y, z}) -
                                   (ev.velocity_laplacian_h({x, y, z}) + uzz) +
                                   ev.pressure_gradient_h(x, y);
      rep.momentum_inf = std::max(
          rep.momentum_inf, std::max(std::abs(res[0]), std::abs(res[1])));
      // constraint: div_H of the vertical average
      Cd divbar(0.0, 0.0);
      for (size_t q = 0; q < gx.size(); ++q) {
        const auto g = ev.velocity_gradient({x, y, gx[q]});
        divbar += gw[q] * (g(0, 0) + g(1, 1));
      }
      rep.constraint_inf = std::max(rep.constraint_inf, std::abs(divbar));
      rep.bc_bottom_inf =
          std::max(rep.bc_bottom_inf, ev.velocity({x, y, -D}).norm());
    }
  }

  // Pressure recovery per parallel mode: integrating the momentum equation
  // in z gives  p_amp = -d_z u_par(-D) / (2 pi |k| D), checked with a
  // 5-point FD derivative of the vertical sum.
  for (const HydrostaticMode& m : sol.modes()) {
    if (m.family != ModeFamily::parallel) continue;
    const VerticalProfile& p = sol.profiles()[m.profile];
    for (double t : t_samples) {
      const double sigma = horizontal_sigma(m.k);
      auto vert = [&](double z) {
        Cd v(0.0, 0.0);
        for (size_t i = 0; i < p.j.size(); ++i) {
          const double om = vertical_omega(p.family, p.j[i], D);
          const double decay =
              sol.evolving() ? std::exp(-om * om * t) : 1.0;
          v += p.coef[i] * decay * (std::cos(om * z) - std::cos(om * D));
        }
        return v;
      };
      const double hd = 0.01 / wmax;
      const Cd dz = (vert(-D - 2 * hd) - 8.0 * vert(-D - hd) +
                     8.0 * vert(-D + hd) - vert(-D + 2 * hd)) /
                    (12.0 * hd);
      Cd gsum(0.0, 0.0);
      for (size_t i = 0; i < p.j.size(); ++i) {
        const double om = vertical_omega(p.family, p.j[i], D);
        const double decay = sol.evolving() ? std::exp(-om * om * t) : 1.0;
        gsum += p.coef[i] * decay * (-om * om * std::cos(om * D));
      }
      const double klen = std::sqrt(sq(double(m.k[0])) + sq(double(m.k[1])));
      const Cd stored = gsum / (kTwoPi * klen);
      const Cd fromflux = -dz / (kTwoPi * klen * D);
      rep.pressure_recovery = std::max(
          rep.pressure_recovery,
          std::abs((stored - fromflux) * m.scale *
                   (sol.evolving() ? std::exp(-sigma * t) : 1.0)));
    }
  }
  return rep;
}

ModeEvolution solve_mode(double depth, std::array<int, 2> k, ModeFamily family,
                         const std::function<double(double)>& initial_profile,
                         int jmax, Trig trig) {
  if (depth <= 0.0) throw std::invalid_argument("depth must be positive");
  {
    ModeSpec probe;
    probe.family = family;
    probe.k = k;
    probe.j = family == ModeFamily::parallel ? 1 : 0;
    validate_spec(probe);
  }
  // Expansion coefficients by composite Gauss quadrature.
  std::vector<double> gx, gw;
  const int nseg = 128, npt = 8;
  std::vector<double> coef;
  std::vector<int> js;
  const int j0 = family == ModeFamily::parallel ? 1 : 0;
  double prof_norm2 = 0.0;
  {
    std::vector<double> sx, sw;
    for (int s = 0; s < nseg; ++s) {
      const double a = -depth + depth * s / nseg;
      const double b = -depth + depth * (s + 1) / nseg;
      gauss_legendre(npt, a, b, sx, sw);
      gx.insert(gx.end(), sx.begin(), sx.end());
      gw.insert(gw.end(), sw.begin(), sw.end());
    }
    for (size_t q = 0; q < gx.size(); ++q)
      prof_norm2 += gw[q] * sq(initial_profile(gx[q]));
  }
  if (family == ModeFamily::parallel) {
    double integral = 0.0;
    for (size_t q = 0; q < gx.size(); ++q)
      integral += gw[q] * initial_profile(gx[q]);
    if (std::abs(integral) > 1e-8 * std::max(1.0, std::sqrt(prof_norm2)))
      throw std::invalid_argument(
          "parallel initial profile violates the zero-integral constraint");
  }
  for (int j = j0; j < j0 + jmax; ++j) {
    const double om = vertical_omega(family, j, depth);
    const double shift = basis_shift(family, om, depth);
    double inner = 0.0;
    for (size_t q = 0; q < gx.size(); ++q)
      inner += gw[q] * initial_profile(gx[q]) * (std::cos(om * gx[q]) - shift);
    coef.push_back(inner / basis_norm2(family, om, depth));
    js.push_back(j);
  }

  ModeEvolution ev;
  OracleSolution sol;
  sol.depth_ = depth;
  sol.evolving_ = true;
  VerticalProfile prof;
  prof.family = family;
  prof.j = js;
  for (double c : coef) prof.coef.push_back(Cd(c, 0.0));
  sol.profiles_.push_back(std::move(prof));
  HydrostaticMode m;
  m.family = family;
  m.k = k;
  m.trig = trig;
  m.dir_par = family == ModeFamily::parallel ||
                      (family == ModeFamily::barotropic)
                  ? 1.0
                  : 0.0;
  m.dir_perp = family == ModeFamily::perpendicular ? 1.0 : 0.0;
  m.profile = 0;
  m.scale = Cd(1.0, 0.0);
  sol.modes_.push_back(m);
  ev.solution = sol;

  const double sigma = horizontal_sigma(k);
  const double D = depth;
  ev.profile = [js, coef, family, D, sigma](double z, double t) {
    Cd v(0.0, 0.0);
    for (size_t i = 0; i < js.size(); ++i) {
      const double om = vertical_omega(family, js[i], D);
      v += coef[i] * std::exp(-(sigma + om * om) * t) *
           (std::cos(om * z) - basis_shift(family, om, D));
    }
    return v;
  };
  if (family == ModeFamily::parallel) {
    const double klen = std::sqrt(sq(double(k[0])) + sq(double(k[1])));
    ev.pressure_amplitude = [js, coef, D, sigma, klen](double t) {
      Cd g(0.0, 0.0);
      for (size_t i = 0; i < js.size(); ++i) {
        const double om = vertical_omega(ModeFamily::parallel, js[i], D);
        g += coef[i] * std::exp(-(sigma + om * om) * t) *
             (-om * om * std::cos(om * D));
      }
      return g / (kTwoPi * klen);
    };
  } else {
    ev.pressure_amplitude = [](double) { return Cd(0.0, 0.0); };
  }
  return ev;
}

// ---------------------------------------------------------------------

int Stokes2dReference::locate(const Point& p, double bary[4]) const {
  const double eps = 1e-12;
  const int i = std::min(n - 1, std::max(0, static_cast<int>(p[0] * n)));
  const int j = std::min(n - 1, std::max(0, static_cast<int>(p[1] * n)));
  const int base = 2 * (j * n + i);
  for (int cand = 0; cand < 2; ++cand) {
    const int c = base + cand;
    const CellGeometry g = cell_geometry(*mesh, c);
    // barycentric coordinates from the affine map
    const double det =
        (g.verts[1][0] - g.verts[0][0]) * (g.verts[2][1] - g.verts[0][1]) -
        (g.verts[2][0] - g.verts[0][0]) * (g.verts[1][1] - g.verts[0][1]);
    const double l1 = ((p[0] - g.verts[0][0]) * (g.verts[2][1] - g.verts[0][1]) -
                       (g.verts[2][0] - g.verts[0][0]) * (p[1] - g.verts[0][1])) /
                      det;
    const double l2 = ((g.verts[1][0] - g.verts[0][0]) * (p[1] - g.verts[0][1]) -
                       (p[0] - g.verts[0][0]) * (g.verts[1][1] - g.verts[0][1])) /
                      det;
    const double l0 = 1.0 - l1 - l2;
    if (l0 >= -eps && l1 >= -eps && l2 >= -eps) {
      bary[0] = l0;
      bary[1] = l1;
      bary[2] = l2;
      bary[3] = 0.0;
      return c;
    }
    if (cand == 1) {  // clamp into the closer triangle
      bary[0] = std::max(l0, 0.0);
      bary[1] = std::max(l1, 0.0);
      bary[2] = std::max(l2, 0.0);
      const double s = bary[0] + bary[1] + bary[2];
      for (int d = 0; d < 3; ++d) bary[d] /= s;
      bary[3] = 0.0;
      return c;
    }
  }
  return -1;
}

namespace {
Eigen::Vector2d eval_vec2(const FunctionSpace& sp, const Eigen::VectorXd& raw,
                          int c, const double* bary) {
  double out[2];
  eval_fe(sp, raw, c, bary, out);
  return Eigen::Vector2d(out[0], out[1]);
}
}  // namespace

Eigen::Vector2d Stokes2dReference::eval_velocity(const Point& p,
                                                 int snap) const {
  double bary[4];
  const int c = locate(p, bary);
  return eval_vec2(*velocity, snapshots[snap].u_raw, c, bary);
}

Eigen::Vector2d Stokes2dReference::eval_velocity_dt(const Point& p,
                                                    int snap) const {
  double bary[4];
  const int c = locate(p, bary);
  return eval_vec2(*velocity, snapshots[snap].du_raw, c, bary);
}

Eigen::Matrix<double, 2, 3> Stokes2dReference::eval_velocity_gradient(
    const Point& p, int snap) const {
  double bary[4];
  const int c = locate(p, bary);
  const CellGeometry g = cell_geometry(*mesh, c);
  const int nbf = velocity->dofs_per_cell;
  std::vector<Eigen::Vector3d> grads(nbf);
  basis_gradients(velocity->family, 2, bary, g.grad_bary, grads.data());
  auto dofs = velocity->cell_scalar_dofs(c);
  Eigen::Matrix<double, 2, 3> out = Eigen::Matrix<double, 2, 3>::Zero();
  const auto& raw = snapshots[snap].u_raw;
  for (int i = 0; i < nbf; ++i)
    for (int comp = 0; comp < 2; ++comp)
      out.row(comp) += raw[dofs[i] * 2 + comp] * grads[i].transpose();
  return out;
}

double Stokes2dReference::eval_pressure(const Point& p, int snap) const {
  double bary[4];
  const int c = locate(p, bary);
  double out[1];
  eval_fe(*pressure, snapshots[snap].p_raw, c, bary, out);
  return out[0];
}

namespace {

Stokes2dReference run_reference(const FieldFunction& u0, int n, double dt,
                                std::span<const double> samples) {
  Stokes2dReference ref;
  ref.n = n;
  ref.dt = dt;
  auto mesh = std::make_shared<Mesh>(triangulate_unit_square(n));
  ref.mesh = mesh;
  auto vel = std::make_shared<FunctionSpace>(
      build_space(mesh, Family::P2, 2, BcSpec::stokes_dirichlet));
  auto pre = std::make_shared<FunctionSpace>(
      build_space(mesh, Family::P1, 1, BcSpec::surface_pressure_zero_mean));
  ref.velocity = vel;
  ref.pressure = pre;
  SaddleSystem sys = assemble_system(vel, pre);
  SchemeSpec spec;
  spec.scheme = Scheme::bdf2;
  spec.dt = dt;
  spec.t_end = samples.empty() ? 0.0 : samples[samples.size() - 1];
  Evolver evolver(sys, spec);
  EvolutionState st = evolver.initialize(u0);
  std::vector<double> svec(samples.begin(), samples.end());
  auto snaps = evolver.evolve(st, svec);
  for (const auto& s : snaps) {
    Stokes2dReference::Snapshot snap;
    snap.t = s.t;
    snap.u_raw = vel->expand(s.u);
    Eigen::VectorXd du;
    if (s.u_prev2.size() > 0)
      du = (1.5 * s.u - 2.0 * s.u_prev + 0.5 * s.u_prev2) / dt;
    else
      du = (s.u - s.u_prev) / dt;
    snap.du_raw = vel->expand(du);
    snap.p_raw = pre->expand(s.p);
    ref.snapshots.push_back(std::move(snap));
  }
  return ref;
}

}  // namespace

Stokes2dReference stokes2d_reference(const FieldFunction& u0, int n_ref,
                                     double dt_ref,
                                     std::span<const double> sample_times) {
  if (n_ref < 4 || n_ref % 2 != 0)
    throw std::invalid_argument("reference resolution must be even and >= 4");
  Stokes2dReference fine = run_reference(u0, n_ref, dt_ref, sample_times);
  Stokes2dReference half = run_reference(u0, n_ref / 2, dt_ref, sample_times);
  // Resolution audit: L2 gap between the two references at the last sample.
  const int last = static_cast<int>(fine.snapshots.size()) - 1;
  const Mesh& cm = *half.mesh;
  const QuadratureRule& rule = simplex_rule(2);
  double acc = 0.0;
  for (int c = 0; c < cm.cell_count(); ++c) {
    const CellGeometry g = cell_geometry(cm, c);
    for (int q = 0; q < rule.size(); ++q) {
      const Point x = g.map(rule.points[q].data());
      const Eigen::Vector2d d =
          fine.eval_velocity(x, last) - half.eval_velocity(x, last);
      acc += g.volume * rule.weights[q] * d.squaredNorm();
    }
  }
  fine.self_difference = std::sqrt(acc);
  return fine;
}

}  // namespace hstokes
