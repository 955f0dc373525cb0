#include "homog/quadrature.hpp"

#include "homog/common.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace homog {

namespace {

// Legendre P_n(x) and its derivative by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    nodes[n - 1 - i] = 0.5 * (x + 1.0);
    weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

namespace {

void add_orbit3(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.emplace_back(a, a, b);
  r.points.emplace_back(a, b, a);
  r.points.emplace_back(b, a, a);
  for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

void add_orbit6(QuadratureRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  const std::array<Eigen::Vector3d, 6> p{Eigen::Vector3d(a, b, c), Eigen::Vector3d(a, c, b), Eigen::Vector3d(b, a, c),
                                         Eigen::Vector3d(b, c, a), Eigen::Vector3d(c, a, b), Eigen::Vector3d(c, b, a)};
  for (const auto& q : p) {
    r.points.push_back(q);
    r.weights.push_back(w);
  }
}

QuadratureRule collapsed(int degree) {
  const int n = (degree + 3) / 2;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule r;
  r.exact_degree = degree;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = x[i];
      const double v = x[j] * (1.0 - u);
      r.points.emplace_back(1.0 - u - v, u, v);
      r.weights.push_back(2.0 * w[i] * w[j] * (1.0 - u));
    }
  return r;
}

QuadratureRule make_rule(int degree) {
  QuadratureRule r;
  switch (degree) {
    case 1:
      r.points.emplace_back(1.0 / 3, 1.0 / 3, 1.0 / 3);
      r.weights.push_back(1.0);
      r.exact_degree = 1;
      return r;
    case 2:
      add_orbit3(r, 1.0 / 6, 1.0 / 3);
      r.exact_degree = 2;
      return r;
    case 4:
      add_orbit3(r, 0.445948490915965, 0.223381589678011);
      add_orbit3(r, 0.091576213509771, 0.109951743655322);
      r.exact_degree = 4;
      return r;
    case 6:
      add_orbit3(r, 0.063089014491502, 0.050844906370207);
      add_orbit3(r, 0.249286745170910, 0.116786275726379);
      add_orbit6(r, 0.053145049844816, 0.310352451033785, 0.082851075618374);
      r.exact_degree = 6;
      return r;
    default:
      return collapsed(degree);
  }
}

}  // namespace

const QuadratureRule& triangle_rule(int degree) {
  static const std::array<QuadratureRule, 21> rules = [] {
    std::array<QuadratureRule, 21> out;
    for (int d = 1; d <= 20; ++d) out[d] = make_rule(d);
    out[0] = out[1];
    return out;
  }();
  if (degree < 0 || degree > 20) throw InvalidArgument("triangle_rule: degree must be in 0..20");
  return rules[degree];
}

}  // namespace homog
