// SPDX-License-Identifier: Apache-2.0

#include "hstokes/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace hstokes {

namespace {

QuadratureRule make_triangle_rule() {
  QuadratureRule r;
  // 7-point degree-5 rule (Hammer-Marlowe-Stroud).
  const double w0 = 9.0 / 40.0;
  const double a1 = 0.0597158717897698, b1 = 0.4701420641051151;
  const double w1 = 0.1323941527885062;
  const double a2 = 0.7974269853530873, b2 = 0.1012865073234563;
  const double w2 = 0.1259391805448271;
  r.points.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0});
  r.weights.push_back(w0);
  for (int i = 0; i < 3; ++i) {
    std::array<double, 4> p1{b1, b1, b1, 0.0};
    p1[i] = a1;
    r.points.push_back(p1);
    r.weights.push_back(w1);
    std::array<double, 4> p2{b2, b2, b2, 0.0};
    p2[i] = a2;
    r.points.push_back(p2);
    r.weights.push_back(w2);
  }
  return r;
}

QuadratureRule make_tet_rule() {
  QuadratureRule r;
  // 14-point degree-5 rule (Keast).
  const double b1 = 0.3108859192633005, w1 = 0.1126879257180162;
  const double b2 = 0.0927352503108912, w2 = 0.0734930431163619;
  const double e = 0.0455037041256497, w3 = 0.0425460207770812;
  for (int i = 0; i < 4; ++i) {
    std::array<double, 4> p{b1, b1, b1, b1};
    p[i] = 1.0 - 3.0 * b1;
    r.points.push_back(p);
    r.weights.push_back(w1);
  }
  for (int i = 0; i < 4; ++i) {
    std::array<double, 4> p{b2, b2, b2, b2};
    p[i] = 1.0 - 3.0 * b2;
    r.points.push_back(p);
    r.weights.push_back(w2);
  }
  for (int i = 0; i < 3; ++i)
    for (int s = 0; s < 2; ++s) {
      // the 6 permutations with two coordinates e, two 1/2 - e
      std::array<double, 4> p{e, e, e, e};
      const double f = 0.5 - e;
      switch (i * 2 + s) {
        case 0: p = {e, e, f, f}; break;
        case 1: p = {f, f, e, e}; break;
        case 2: p = {e, f, e, f}; break;
        case 3: p = {f, e, f, e}; break;
        case 4: p = {e, f, f, e}; break;
        case 5: p = {f, e, e, f}; break;
      }
      r.points.push_back(p);
      r.weights.push_back(w3);
    }
  return r;
}

}  // namespace

const QuadratureRule& simplex_rule(int dim) {
  static const QuadratureRule tri = make_triangle_rule();
  static const QuadratureRule tet = make_tet_rule();
  if (dim == 2) return tri;
  if (dim == 3) return tet;
  throw std::invalid_argument("quadrature supports dim 2 or 3");
}

void gauss_legendre(int n, double a, double b, std::vector<double>& x,
                    std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  const double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    x[i] = xm - xl * z;
    x[n - 1 - i] = xm + xl * z;
    w[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace hstokes
