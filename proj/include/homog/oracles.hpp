#pragma once

#include "homog/coefficients.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace homog {

/// Adaptive Gauss-Kronrod integral of f over [a, b], split at the given
/// interior points, to relative tolerance tol.
double integrate_1d(const std::function<double(double)>& f, double a, double b, const std::vector<double>& splits = {},
                    double tol = 1e-12);

/// Reference quantities for a coefficient depending on y1 only.
struct SeparableOracle {
  std::string kind;
  /// Normalization C = (int_0^1 dt / a11)^-1.
  double C = 1.0;
  Mat2 A0 = Mat2::Identity();
  std::function<double(const Vec2&)> m_exact;
  /// d2_kl chi_ij at y.
  std::function<double(int i, int j, int k, int l, const Vec2&)> corrector_hessian;
  /// d_r chi_ij at y, by integrating the closed-form second derivative with
  /// the zero-mean normalization.
  std::function<double(int i, int j, int r, const Vec2&)> corrector_gradient;
};

/// Throws WrongOracle if A depends on y2 (sampled, tolerance 1e-12).
SeparableOracle oracle_y1_only(CellCoefficientPtr a);

/// Reference quantities for A(x, y) = diag(a11(x, y1), a22(x, y2)).
struct DiagProductOracle {
  std::function<Mat2(const Vec2& x)> A0;
  std::function<double(const Vec2& x, const Vec2& y)> m_exact;
  std::function<double(const Vec2& x, int i, int j, int k, int l, const Vec2& y)> corrector_hessian;
};

/// Throws WrongOracle if the structure is violated on the sample grid.
DiagProductOracle oracle_diag_product(MacroCoefficientPtr a);

/// u0 = x1 (x1 - 1) x2 (x2 - 1) / 2 with all partial derivatives.
struct KnownSolution {
  /// d^a_1 d^b_2 u0 at x.
  double partial(const Vec2& x, int a, int b) const;
  Jet jet(const Vec2& x, int order) const;
  JetFunction as_jet_function() const;
};

KnownSolution known_u0(const std::string& which = "paper41");

/// f = A0 : D2 u0 for the known u0 and a constant or x-dependent A0.
ScalarFunction rhs_for_known_u0(const Mat2& a0);
ScalarFunction rhs_for_known_u0(std::function<Mat2(const Vec2&)> a0);

}  // namespace homog
