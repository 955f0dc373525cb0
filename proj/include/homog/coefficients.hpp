#pragma once

#include "homog/common.hpp"
#include "homog/expression.hpp"

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace homog {

enum class Smoothness { W1q, W2inf };

/// A line {y_axis = position (mod 1)} across which the axis-derivative of A
/// jumps by `jump` (right limit minus left limit). A stays Lipschitz there.
struct Kink {
  int axis = 0;
  double position = 0.5;
  Mat2 jump = Mat2::Zero();
};

struct CoefficientInfo {
  std::string name;
  double lambda = 1.0;
  double Lambda = 1.0;
  Smoothness smoothness = Smoothness::W1q;
  /// False when div is obtained by central finite differences.
  bool analytic_div = true;
  /// True when lambda/Lambda were estimated by sampling.
  bool bounds_estimated = false;
};

/// Y-periodic symmetric 2x2 coefficient A(y).
class CellCoefficient {
 public:
  explicit CellCoefficient(CoefficientInfo info) : info_(std::move(info)) {}
  virtual ~CellCoefficient() = default;

  virtual Mat2 eval(const Vec2& y) const = 0;
  /// Row-wise divergence: (div A)_k = sum_j d_j a_kj.
  virtual Vec2 div(const Vec2& y) const = 0;
  /// d_r A. Requires W2inf smoothness.
  virtual Mat2 grad(const Vec2& y, int r) const;
  /// Regular (pointwise a.e.) part of d2_rs A. Singular parts along kinks are
  /// described by kinks(). Requires W2inf smoothness.
  virtual Mat2 hess(const Vec2& y, int r, int s) const;
  virtual std::vector<Kink> kinks() const { return {}; }

  /// (div d_r A)_k = sum_j d_j d_r a_kj, regular part.
  Vec2 div_grad(const Vec2& y, int r) const;

  const CoefficientInfo& info() const { return info_; }
  bool has_second_derivatives() const { return info_.smoothness == Smoothness::W2inf; }

 protected:
  CoefficientInfo info_;
};

/// Coefficient A(x, y), Y-periodic in y.
class MacroCoefficient {
 public:
  explicit MacroCoefficient(CoefficientInfo info) : info_(std::move(info)) {}
  virtual ~MacroCoefficient() = default;

  virtual Mat2 eval(const Vec2& x, const Vec2& y) const = 0;
  virtual Vec2 div_y(const Vec2& x, const Vec2& y) const = 0;
  virtual Mat2 grad_y(const Vec2& x, const Vec2& y, int r) const;
  virtual Mat2 hess_y(const Vec2& x, const Vec2& y, int r, int s) const;
  virtual std::vector<Kink> kinks(const Vec2& x) const { return {}; }

  const CoefficientInfo& info() const { return info_; }

 protected:
  CoefficientInfo info_;
};

using CellCoefficientPtr = std::shared_ptr<const CellCoefficient>;
using MacroCoefficientPtr = std::shared_ptr<const MacroCoefficient>;
using AnyCoefficient = std::variant<CellCoefficientPtr, MacroCoefficientPtr>;

/// Constant matrix field (must be symmetric positive definite).
CellCoefficientPtr constant_coefficient(const Mat2& a, const std::string& name = "constant");

/// Builtins: identity, constant_spd(d1,d2[,d12]), sep_diag(a), paper41 (cell)
/// and paper43 (macro). Throws LookupError for unknown names.
AnyCoefficient builtin(const std::string& spec);
CellCoefficientPtr builtin_cell(const std::string& spec);
MacroCoefficientPtr builtin_macro(const std::string& spec);

/// Field from expressions in y1, y2 (and x1, x2 when `allow_x`). Divergence
/// by central differences with step 1e-6; ellipticity bounds sampled with a
/// 10% margin.
AnyCoefficient parse_expression_field(const std::string& a11, const std::string& a12, const std::string& a22,
                                      bool allow_x);
CellCoefficientPtr parse_cell_field(const std::string& a11, const std::string& a12, const std::string& a22);
MacroCoefficientPtr parse_macro_field(const std::string& a11, const std::string& a12, const std::string& a22);

/// A(x, .) for fixed x as a cell coefficient.
CellCoefficientPtr freeze(MacroCoefficientPtr field, const Vec2& x);
/// An x-independent macro view of a cell coefficient.
MacroCoefficientPtr as_macro(CellCoefficientPtr field);

/// Central finite-difference divergence with the given step.
Vec2 fd_divergence(const CellCoefficient& a, const Vec2& y, double step = 1e-6);

struct EllipticityBounds {
  double lambda = 0.0;
  double Lambda = 0.0;
};
/// Eigenvalue extrema over an n-by-n grid of Y (and of x for macro fields).
EllipticityBounds sample_ellipticity(const CellCoefficient& a, int n = 101);
EllipticityBounds sample_ellipticity(const MacroCoefficient& a, int n_y = 41, int n_x = 9);

struct CordesReport {
  double delta = 0.0;
  double gamma_min = 0.0;
  double gamma_max = 0.0;
  int sample_resolution = 0;
};

/// gamma(A) = tr A / |A|^2 (Frobenius norm).
inline double cordes_gamma(const Mat2& a) { return a.trace() / a.squaredNorm(); }

/// Largest delta with |A|^2/(tr A)^2 <= 1/(1+delta) over the sample grid,
/// clamped to (0, 1]. Throws EllipticityViolation if tr A <= 0 anywhere.
CordesReport cordes_check(const CellCoefficient& a, int sample_n = 101);
CordesReport cordes_check(const MacroCoefficient& a, int sample_n = 41, int sample_x = 9);

}  // namespace homog
