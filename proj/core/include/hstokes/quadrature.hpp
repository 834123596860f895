// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

namespace hstokes {

/// Symmetric quadrature on the reference simplex in barycentric
/// coordinates. Weights sum to 1; multiply by the cell volume.
struct QuadratureRule {
  std::vector<std::array<double, 4>> points;  // barycentric, unused = 0
  std::vector<double> weights;
  int size() const { return static_cast<int>(weights.size()); }
};

/// Degree-5 rules (7-point triangle, 14-point tetrahedron). Degree 5
/// covers every form assembled here up to the bubble-bubble mass terms,
/// which only stabilize and need no exact integration.
const QuadratureRule& simplex_rule(int dim);

/// Gauss-Legendre nodes/weights on [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double>& x,
                    std::vector<double>& w);

}  // namespace hstokes
