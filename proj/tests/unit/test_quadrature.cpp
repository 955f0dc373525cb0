#include "homog/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace homog;

namespace {

// Exact integral of x^a y^b over the reference triangle, divided by its area 1/2.
double monomial_mean(int a, int b) {
  return 2.0 * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

}  // namespace

TEST(TriangleRule, WeightsPositiveAndSumToOne) {
  for (int d = 1; d <= 20; ++d) {
    const auto& r = triangle_rule(d);
    EXPECT_GE(r.exact_degree, d);
    double s = 0.0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      s += w;
    }
    EXPECT_NEAR(s, 1.0, 1e-14) << "degree " << d;
  }
}

TEST(TriangleRule, IntegratesDeclaredDegree) {
  for (int d = 1; d <= 20; ++d) {
    const auto& r = triangle_rule(d);
    for (int a = 0; a <= r.exact_degree; ++a)
      for (int b = 0; a + b <= r.exact_degree; ++b) {
        double s = 0.0;
        for (std::size_t q = 0; q < r.points.size(); ++q)
          s += r.weights[q] * std::pow(r.points[q][1], a) * std::pow(r.points[q][2], b);
        EXPECT_NEAR(s, monomial_mean(a, b), 1e-14) << "rule " << d << " monomial " << a << "," << b;
      }
  }
}

TEST(TriangleRule, BarycentricPointsInside) {
  for (int d = 1; d <= 20; ++d)
    for (const auto& p : triangle_rule(d).points) {
      EXPECT_NEAR(p.sum(), 1.0, 1e-15);
      EXPECT_GE(p.minCoeff(), 0.0);
    }
}

TEST(TriangleRule, SymmetricRuleSizes) {
  EXPECT_EQ(triangle_rule(1).points.size(), 1u);
  EXPECT_EQ(triangle_rule(2).points.size(), 3u);
  EXPECT_EQ(triangle_rule(4).points.size(), 6u);
  EXPECT_EQ(triangle_rule(6).points.size(), 12u);
}

TEST(GaussLegendre, ExactOnUnitInterval) {
  for (int n = 1; n <= 12; ++n) {
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += w[i] * std::pow(x[i], k);
      EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14);
    }
  }
}
