#include "homog/coefficients.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homog {

Mat2 CellCoefficient::grad(const Vec2&, int) const {
  throw CapabilityError("coefficient '" + info_.name + "' does not provide derivatives");
}

Mat2 CellCoefficient::hess(const Vec2&, int, int) const {
  throw CapabilityError("coefficient '" + info_.name + "' does not provide second derivatives");
}

Vec2 CellCoefficient::div_grad(const Vec2& y, int r) const {
  const Mat2 h0 = hess(y, r, 0);
  const Mat2 h1 = hess(y, r, 1);
  return Vec2(h0(0, 0) + h1(0, 1), h0(1, 0) + h1(1, 1));
}

Mat2 MacroCoefficient::grad_y(const Vec2&, const Vec2&, int) const {
  throw CapabilityError("coefficient '" + info_.name + "' does not provide derivatives");
}

Mat2 MacroCoefficient::hess_y(const Vec2&, const Vec2&, int, int) const {
  throw CapabilityError("coefficient '" + info_.name + "' does not provide second derivatives");
}

namespace {

Mat2 sym(double a11, double a12, double a22) {
  Mat2 m;
  m << a11, a12, a12, a22;
  return m;
}

// s(t) = arcsin(sin^2(pi t)) and its derivatives. s is Lipschitz with a kink
// at t = 1/2 (mod 1); s' uses the form that stays finite there and is set to 0
// exactly on the kink.
double arcsin_sin2(double t) {
  const double s = std::sin(kPi * t);
  return std::asin(std::min(1.0, s * s));
}

bool on_half(double t) {
  const double r = t - std::floor(t);
  return std::abs(r - 0.5) < 1e-15;
}

double arcsin_sin2_d1(double t) {
  if (on_half(t)) return 0.0;
  const double s = std::sin(kPi * t);
  const double c = std::cos(kPi * t);
  const double sg = c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
  return 2.0 * kPi * s * sg / std::sqrt(1.0 + s * s);
}

double arcsin_sin2_d2(double t) {
  const double s = std::sin(kPi * t);
  const double c = std::cos(kPi * t);
  return 2.0 * kPi * kPi * std::abs(c) / std::pow(1.0 + s * s, 1.5);
}

const double kArcsinKinkJump = -2.0 * std::sqrt(2.0) * kPi;

class ConstantField final : public CellCoefficient {
 public:
  ConstantField(const Mat2& a, CoefficientInfo info) : CellCoefficient(std::move(info)), a_(a) {}
  Mat2 eval(const Vec2&) const override { return a_; }
  Vec2 div(const Vec2&) const override { return Vec2::Zero(); }
  Mat2 grad(const Vec2&, int) const override { return Mat2::Zero(); }
  Mat2 hess(const Vec2&, int, int) const override { return Mat2::Zero(); }

 private:
  Mat2 a_;
};

// diag(a + sin^2(pi y1), 1)
class SepDiagField final : public CellCoefficient {
 public:
  SepDiagField(double a, CoefficientInfo info) : CellCoefficient(std::move(info)), a_(a) {}
  Mat2 eval(const Vec2& y) const override {
    const double s = std::sin(kPi * y.x());
    return sym(a_ + s * s, 0.0, 1.0);
  }
  Vec2 div(const Vec2& y) const override { return Vec2(kPi * std::sin(2.0 * kPi * y.x()), 0.0); }
  Mat2 grad(const Vec2& y, int r) const override {
    if (r != 0) return Mat2::Zero();
    return sym(kPi * std::sin(2.0 * kPi * y.x()), 0.0, 0.0);
  }
  Mat2 hess(const Vec2& y, int r, int s) const override {
    if (r != 0 || s != 0) return Mat2::Zero();
    return sym(2.0 * kPi * kPi * std::cos(2.0 * kPi * y.x()), 0.0, 0.0);
  }

 private:
  double a_;
};

// [[1 + arcsin(sin^2 pi y1), sin(pi y1) cos(pi y1)], [., 2 + cos^2 pi y1]]
class Paper41Field final : public CellCoefficient {
 public:
  explicit Paper41Field(CoefficientInfo info) : CellCoefficient(std::move(info)) {}
  Mat2 eval(const Vec2& y) const override {
    const double t = y.x();
    const double c = std::cos(kPi * t);
    return sym(1.0 + arcsin_sin2(t), 0.5 * std::sin(2.0 * kPi * t), 2.0 + c * c);
  }
  Vec2 div(const Vec2& y) const override {
    const double t = y.x();
    return Vec2(arcsin_sin2_d1(t), kPi * std::cos(2.0 * kPi * t));
  }
  Mat2 grad(const Vec2& y, int r) const override {
    if (r != 0) return Mat2::Zero();
    const double t = y.x();
    return sym(arcsin_sin2_d1(t), kPi * std::cos(2.0 * kPi * t), -kPi * std::sin(2.0 * kPi * t));
  }
  Mat2 hess(const Vec2& y, int r, int s) const override {
    if (r != 0 || s != 0) return Mat2::Zero();
    const double t = y.x();
    const double w = 2.0 * kPi * kPi;
    return sym(arcsin_sin2_d2(t), -w * std::sin(2.0 * kPi * t), -w * std::cos(2.0 * kPi * t));
  }
  std::vector<Kink> kinks() const override { return {Kink{0, 0.5, sym(kArcsinKinkJump, 0.0, 0.0)}}; }
};

// diag(exp(x1 x2) + |x|^2/4 arcsin(sin^2 pi y1), 2 + x2 cos(2 pi y2 + x1))
class Paper43Field final : public MacroCoefficient {
 public:
  explicit Paper43Field(CoefficientInfo info) : MacroCoefficient(std::move(info)) {}
  Mat2 eval(const Vec2& x, const Vec2& y) const override {
    return sym(std::exp(x.x() * x.y()) + 0.25 * x.squaredNorm() * arcsin_sin2(y.x()), 0.0,
               2.0 + x.y() * std::cos(2.0 * kPi * y.y() + x.x()));
  }
  Vec2 div_y(const Vec2& x, const Vec2& y) const override {
    return Vec2(0.25 * x.squaredNorm() * arcsin_sin2_d1(y.x()),
                -2.0 * kPi * x.y() * std::sin(2.0 * kPi * y.y() + x.x()));
  }
  Mat2 grad_y(const Vec2& x, const Vec2& y, int r) const override {
    if (r == 0) return sym(0.25 * x.squaredNorm() * arcsin_sin2_d1(y.x()), 0.0, 0.0);
    return sym(0.0, 0.0, -2.0 * kPi * x.y() * std::sin(2.0 * kPi * y.y() + x.x()));
  }
  Mat2 hess_y(const Vec2& x, const Vec2& y, int r, int s) const override {
    if (r != s) return Mat2::Zero();
    if (r == 0) return sym(0.25 * x.squaredNorm() * arcsin_sin2_d2(y.x()), 0.0, 0.0);
    return sym(0.0, 0.0, -4.0 * kPi * kPi * x.y() * std::cos(2.0 * kPi * y.y() + x.x()));
  }
  std::vector<Kink> kinks(const Vec2& x) const override {
    return {Kink{0, 0.5, sym(0.25 * x.squaredNorm() * kArcsinKinkJump, 0.0, 0.0)}};
  }
};

class ParsedCellField final : public CellCoefficient {
 public:
  ParsedCellField(Expression a11, Expression a12, Expression a22, CoefficientInfo info)
      : CellCoefficient(std::move(info)), a11_(std::move(a11)), a12_(std::move(a12)), a22_(std::move(a22)) {}
  Mat2 eval(const Vec2& y) const override {
    ExprVars v;
    v.y1 = y.x();
    v.y2 = y.y();
    return sym(a11_.eval(v), a12_.eval(v), a22_.eval(v));
  }
  Vec2 div(const Vec2& y) const override { return fd_divergence(*this, y); }
  void set_bounds(const EllipticityBounds& b) {
    info_.lambda = b.lambda;
    info_.Lambda = b.Lambda;
  }

 private:
  Expression a11_, a12_, a22_;
};

class ParsedMacroField final : public MacroCoefficient {
 public:
  ParsedMacroField(Expression a11, Expression a12, Expression a22, CoefficientInfo info)
      : MacroCoefficient(std::move(info)), a11_(std::move(a11)), a12_(std::move(a12)), a22_(std::move(a22)) {}
  Mat2 eval(const Vec2& x, const Vec2& y) const override {
    const ExprVars v{x.x(), x.y(), y.x(), y.y()};
    return sym(a11_.eval(v), a12_.eval(v), a22_.eval(v));
  }
  Vec2 div_y(const Vec2& x, const Vec2& y) const override {
    constexpr double h = 1e-6;
    Vec2 d = Vec2::Zero();
    for (int j = 0; j < 2; ++j) {
      Vec2 e = Vec2::Zero();
      e[j] = h;
      const Mat2 diff = (eval(x, y + e) - eval(x, y - e)) / (2.0 * h);
      d += diff.col(j);
    }
    return d;
  }
  void set_bounds(const EllipticityBounds& b) {
    info_.lambda = b.lambda;
    info_.Lambda = b.Lambda;
  }

 private:
  Expression a11_, a12_, a22_;
};

class FrozenField final : public CellCoefficient {
 public:
  FrozenField(MacroCoefficientPtr f, const Vec2& x, CoefficientInfo info)
      : CellCoefficient(std::move(info)), f_(std::move(f)), x_(x) {}
  Mat2 eval(const Vec2& y) const override { return f_->eval(x_, y); }
  Vec2 div(const Vec2& y) const override { return f_->div_y(x_, y); }
  Mat2 grad(const Vec2& y, int r) const override { return f_->grad_y(x_, y, r); }
  Mat2 hess(const Vec2& y, int r, int s) const override { return f_->hess_y(x_, y, r, s); }
  std::vector<Kink> kinks() const override { return f_->kinks(x_); }

 private:
  MacroCoefficientPtr f_;
  Vec2 x_;
};

class LiftedField final : public MacroCoefficient {
 public:
  explicit LiftedField(CellCoefficientPtr c) : MacroCoefficient(c->info()), c_(std::move(c)) {}
  Mat2 eval(const Vec2&, const Vec2& y) const override { return c_->eval(y); }
  Vec2 div_y(const Vec2&, const Vec2& y) const override { return c_->div(y); }
  Mat2 grad_y(const Vec2&, const Vec2& y, int r) const override { return c_->grad(y, r); }
  Mat2 hess_y(const Vec2&, const Vec2& y, int r, int s) const override { return c_->hess(y, r, s); }
  std::vector<Kink> kinks(const Vec2&) const override { return c_->kinks(); }

 private:
  CellCoefficientPtr c_;
};

struct ParsedSpec {
  std::string name;
  std::vector<double> args;
};

ParsedSpec parse_spec(const std::string& spec) {
  ParsedSpec out;
  const auto open = spec.find('(');
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  if (open == std::string::npos) {
    out.name = trim(spec);
    return out;
  }
  out.name = trim(spec.substr(0, open));
  const auto close = spec.rfind(')');
  if (close == std::string::npos || close < open) throw LookupError("malformed coefficient name '" + spec + "'");
  std::stringstream ss(spec.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const std::string t = trim(item);
      out.args.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw LookupError("bad numeric argument in coefficient name '" + spec + "'");
    }
  }
  return out;
}

void require_spd(const Mat2& a, const std::string& name) {
  if (!(a(0, 0) > 0.0 && a.determinant() > 0.0))
    throw EllipticityViolation("coefficient '" + name + "' is not positive definite");
}

}  // namespace

CellCoefficientPtr constant_coefficient(const Mat2& a, const std::string& name) {
  if (std::abs(a(0, 1) - a(1, 0)) > 1e-14) throw InvalidArgument("constant coefficient must be symmetric");
  require_spd(a, name);
  Eigen::SelfAdjointEigenSolver<Mat2> es(a);
  CoefficientInfo info{name, es.eigenvalues()[0], es.eigenvalues()[1], Smoothness::W2inf, true, false};
  return std::make_shared<ConstantField>(a, info);
}

AnyCoefficient builtin(const std::string& spec) {
  const ParsedSpec p = parse_spec(spec);
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (p.args.size() < lo || p.args.size() > hi)
      throw LookupError("wrong number of arguments for builtin '" + p.name + "'");
  };
  if (p.name == "identity") {
    need(0, 0);
    return constant_coefficient(Mat2::Identity(), "identity");
  }
  if (p.name == "constant_spd") {
    need(2, 3);
    const double d12 = p.args.size() == 3 ? p.args[2] : 0.0;
    return constant_coefficient(sym(p.args[0], d12, p.args[1]), spec);
  }
  if (p.name == "sep_diag") {
    need(1, 1);
    const double a = p.args[0];
    if (!(a > 0.0)) throw EllipticityViolation("sep_diag(a) needs a > 0");
    CoefficientInfo info{spec, std::min(a, 1.0), std::max(a + 1.0, 1.0), Smoothness::W2inf, true, false};
    return std::make_shared<SepDiagField>(a, info);
  }
  if (p.name == "paper41") {
    need(0, 0);
    return std::make_shared<Paper41Field>(CoefficientInfo{"paper41", 1.0, 3.0, Smoothness::W2inf, true, false});
  }
  if (p.name == "paper43") {
    need(0, 0);
    return std::make_shared<Paper43Field>(
        CoefficientInfo{"paper43", 1.0, std::numbers::e + kPi / 4.0, Smoothness::W2inf, true, false});
  }
  throw LookupError("unknown builtin coefficient '" + p.name + "'");
}

CellCoefficientPtr builtin_cell(const std::string& spec) {
  auto c = builtin(spec);
  if (auto* p = std::get_if<CellCoefficientPtr>(&c)) return *p;
  throw LookupError("builtin '" + spec + "' depends on the macro variable");
}

MacroCoefficientPtr builtin_macro(const std::string& spec) {
  auto c = builtin(spec);
  if (auto* p = std::get_if<MacroCoefficientPtr>(&c)) return *p;
  return as_macro(std::get<CellCoefficientPtr>(c));
}

CellCoefficientPtr parse_cell_field(const std::string& a11, const std::string& a12, const std::string& a22) {
  CoefficientInfo info{"expr", 0.0, 0.0, Smoothness::W1q, false, true};
  auto f = std::make_shared<ParsedCellField>(Expression::parse(a11, false), Expression::parse(a12, false),
                                             Expression::parse(a22, false), info);
  auto b = sample_ellipticity(*f);
  if (!(b.lambda > 0.0)) throw EllipticityViolation("expression field is not uniformly elliptic on the sample grid");
  f->set_bounds({0.9 * b.lambda, 1.1 * b.Lambda});
  return f;
}

MacroCoefficientPtr parse_macro_field(const std::string& a11, const std::string& a12, const std::string& a22) {
  CoefficientInfo info{"expr", 0.0, 0.0, Smoothness::W1q, false, true};
  auto f = std::make_shared<ParsedMacroField>(Expression::parse(a11, true), Expression::parse(a12, true),
                                              Expression::parse(a22, true), info);
  auto b = sample_ellipticity(*f);
  if (!(b.lambda > 0.0)) throw EllipticityViolation("expression field is not uniformly elliptic on the sample grid");
  f->set_bounds({0.9 * b.lambda, 1.1 * b.Lambda});
  return f;
}

AnyCoefficient parse_expression_field(const std::string& a11, const std::string& a12, const std::string& a22,
                                      bool allow_x) {
  if (!allow_x) return parse_cell_field(a11, a12, a22);
  const bool uses_x = Expression::parse(a11).uses_x() || Expression::parse(a12).uses_x() ||
                      Expression::parse(a22).uses_x();
  if (!uses_x) return parse_cell_field(a11, a12, a22);
  return parse_macro_field(a11, a12, a22);
}

CellCoefficientPtr freeze(MacroCoefficientPtr field, const Vec2& x) {
  CoefficientInfo info = field->info();
  std::ostringstream os;
  os << info.name << "@(" << x.x() << "," << x.y() << ")";
  info.name = os.str();
  return std::make_shared<FrozenField>(std::move(field), x, info);
}

MacroCoefficientPtr as_macro(CellCoefficientPtr field) { return std::make_shared<LiftedField>(std::move(field)); }

Vec2 fd_divergence(const CellCoefficient& a, const Vec2& y, double step) {
  Vec2 d = Vec2::Zero();
  for (int j = 0; j < 2; ++j) {
    Vec2 e = Vec2::Zero();
    e[j] = step;
    d += ((a.eval(y + e) - a.eval(y - e)) / (2.0 * step)).col(j);
  }
  return d;
}

namespace {

template <class Visit>
void sample_grid(int n, Visit&& visit) {
  const int m = std::max(2, n);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) visit(Vec2(static_cast<double>(i) / (m - 1), static_cast<double>(j) / (m - 1)));
}

void accumulate_bounds(const Mat2& a, EllipticityBounds& b) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(a, Eigen::EigenvaluesOnly);
  b.lambda = std::min(b.lambda, es.eigenvalues()[0]);
  b.Lambda = std::max(b.Lambda, es.eigenvalues()[1]);
}

void accumulate_cordes(const Mat2& a, CordesReport& r, double& ratio_max) {
  const double tr = a.trace();
  if (!(tr > 0.0)) throw EllipticityViolation("tr A <= 0 at a sample point");
  const double nrm2 = a.squaredNorm();
  ratio_max = std::max(ratio_max, nrm2 / (tr * tr));
  const double g = tr / nrm2;
  r.gamma_min = std::min(r.gamma_min, g);
  r.gamma_max = std::max(r.gamma_max, g);
}

CordesReport finish_cordes(CordesReport r, double ratio_max) {
  r.delta = std::clamp(1.0 / ratio_max - 1.0, 0.0, 1.0);
  if (!(r.delta > 0.0)) throw EllipticityViolation("Cordes condition fails on the sample grid");
  return r;
}

}  // namespace

EllipticityBounds sample_ellipticity(const CellCoefficient& a, int n) {
  EllipticityBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  sample_grid(n, [&](const Vec2& y) { accumulate_bounds(a.eval(y), b); });
  return b;
}

EllipticityBounds sample_ellipticity(const MacroCoefficient& a, int n_y, int n_x) {
  EllipticityBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  sample_grid(n_x, [&](const Vec2& x) { sample_grid(n_y, [&](const Vec2& y) { accumulate_bounds(a.eval(x, y), b); }); });
  return b;
}

CordesReport cordes_check(const CellCoefficient& a, int sample_n) {
  CordesReport r{0.0, std::numeric_limits<double>::infinity(), 0.0, sample_n};
  double ratio_max = 0.0;
  sample_grid(sample_n, [&](const Vec2& y) { accumulate_cordes(a.eval(y), r, ratio_max); });
  return finish_cordes(r, ratio_max);
}

CordesReport cordes_check(const MacroCoefficient& a, int sample_n, int sample_x) {
  CordesReport r{0.0, std::numeric_limits<double>::infinity(), 0.0, sample_n};
  double ratio_max = 0.0;
  sample_grid(sample_x, [&](const Vec2& x) {
    sample_grid(sample_n, [&](const Vec2& y) { accumulate_cordes(a.eval(x, y), r, ratio_max); });
  });
  return finish_cordes(r, ratio_max);
}

}  // namespace homog
