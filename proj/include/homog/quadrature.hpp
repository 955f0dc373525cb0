#pragma once

#include <Eigen/Dense>

#include <vector>

namespace homog {

/// Rule on the reference triangle. Points are barycentric coordinates,
/// weights sum to 1 and are scaled by the triangle area at use.
struct QuadratureRule {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
  int exact_degree = 0;
};

/// Rule exact for polynomials of total degree <= `degree` (1..20). Degrees
/// 1, 2, 4 and 6 use symmetric rules with 1, 3, 6 and 12 points; the others
/// use a collapsed Gauss-Legendre product rule.
const QuadratureRule& triangle_rule(int degree);

/// n-point Gauss-Legendre rule on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace homog
