#include "homog/oracles.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace homog {

double integrate_1d(const std::function<double(double)>& f, double a, double b, const std::vector<double>& splits,
                    double tol) {
  std::vector<double> pts{a};
  for (double s : splits)
    if (s > a && s < b) pts.push_back(s);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k)
    sum += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, pts[k], pts[k + 1], 15, tol);
  return sum;
}

namespace {

std::vector<double> kink_splits(const std::vector<Kink>& kinks, int axis) {
  std::vector<double> s;
  for (const auto& k : kinks)
    if (k.axis == axis) s.push_back(k.position - std::floor(k.position));
  return s;
}

double frac(double t) { return t - std::floor(t); }

// Cumulative integral F(y) = int_0^y g on [0, 1], tabulated on a grid that
// contains the split points, so that evaluation integrates only short
// intervals free of kinks.
class Cumulative {
 public:
  Cumulative(std::function<double(double)> g, std::vector<double> splits, int n = 256) : g_(std::move(g)) {
    nodes_.reserve(n + 1 + splits.size());
    for (int k = 0; k <= n; ++k) nodes_.push_back(static_cast<double>(k) / n);
    for (double s : splits) nodes_.push_back(s);
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
    values_.assign(nodes_.size(), 0.0);
    for (std::size_t k = 1; k < nodes_.size(); ++k) values_[k] = values_[k - 1] + integrate_1d(g_, nodes_[k - 1], nodes_[k]);
  }

  double operator()(double y) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), y);
    const std::size_t k = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
    if (y == nodes_[k]) return values_[k];
    // Kink-free and short, so a fixed Gauss rule is accurate to roundoff.
    return values_[k] + boost::math::quadrature::gauss<double, 30>::integrate(g_, nodes_[k], y);
  }
  double total() const { return values_.back(); }
  double mean() const {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k)
      s += boost::math::quadrature::gauss<double, 30>::integrate(*this, nodes_[k], nodes_[k + 1]);
    return s;
  }

 private:
  std::function<double(double)> g_;
  std::vector<double> nodes_, values_;
};

}  // namespace

SeparableOracle oracle_y1_only(CellCoefficientPtr a) {
  for (int i = 0; i <= 20; ++i)
    for (int j = 1; j <= 20; ++j) {
      const double y1 = i / 20.0;
      if ((a->eval(Vec2(y1, j / 20.0)) - a->eval(Vec2(y1, 0.0))).cwiseAbs().maxCoeff() > 1e-12)
        throw WrongOracle("oracle_y1_only: coefficient '" + a->info().name + "' depends on y2");
    }
  const auto splits = kink_splits(a->kinks(), 0);
  SeparableOracle o;
  o.kind = "y1_only";
  o.C = 1.0 / integrate_1d([&a](double t) { return 1.0 / a->eval(Vec2(t, 0.0))(0, 0); }, 0.0, 1.0, splits);
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j) {
      o.A0(i, j) = o.C * integrate_1d([&a, i, j](double t) {
        const Mat2 v = a->eval(Vec2(t, 0.0));
        return v(i, j) / v(0, 0);
      }, 0.0, 1.0, splits);
      o.A0(j, i) = o.A0(i, j);
    }
  const double C = o.C;
  const Mat2 A0 = o.A0;
  o.m_exact = [a, C](const Vec2& y) { return C / a->eval(Vec2(frac(y.x()), 0.0))(0, 0); };
  auto second = [a, A0](int i, int j, double t) {
    const Mat2 v = a->eval(Vec2(t, 0.0));
    return (A0(i, j) - v(i, j)) / v(0, 0);
  };
  o.corrector_hessian = [second](int i, int j, int k, int l, const Vec2& y) {
    return (k == 0 && l == 0) ? second(i, j, frac(y.x())) : 0.0;
  };
  // d_1 chi_ij = F(y1) - int_0^1 F with F(y) = int_0^y chi_ij''.
  std::vector<std::shared_ptr<Cumulative>> F;
  std::vector<double> mean;
  for (int ij = 0; ij < 3; ++ij) {
    const int i = ij == 2 ? 1 : 0, j = ij == 0 ? 0 : 1;
    auto cf = std::make_shared<Cumulative>([second, i, j](double t) { return second(i, j, t); }, splits);
    F.push_back(cf);
    mean.push_back(cf->mean());
  }
  o.corrector_gradient = [F, mean](int i, int j, int r, const Vec2& y) {
    if (r != 0) return 0.0;
    const int ij = i + j;
    return (*F[ij])(frac(y.x())) - mean[ij];
  };
  return o;
}

DiagProductOracle oracle_diag_product(MacroCoefficientPtr a) {
  for (int ix = 0; ix <= 4; ++ix)
    for (int i = 0; i <= 10; ++i)
      for (int j = 0; j <= 10; ++j) {
        const Vec2 x(ix / 4.0, 1.0 - ix / 4.0);
        const Vec2 y(i / 10.0, j / 10.0);
        const Mat2 v = a->eval(x, y);
        const bool ok = std::abs(v(0, 1)) <= 1e-12 && std::abs(v(0, 0) - a->eval(x, Vec2(y.x(), 0.0))(0, 0)) <= 1e-12 &&
                        std::abs(v(1, 1) - a->eval(x, Vec2(0.0, y.y()))(1, 1)) <= 1e-12;
        if (!ok) throw WrongOracle("oracle_diag_product: coefficient '" + a->info().name + "' is not diag(a11(x,y1), a22(x,y2))");
      }
  DiagProductOracle o;
  auto harmonic = [a](const Vec2& x, int i) {
    const auto splits = kink_splits(a->kinks(x), i);
    return 1.0 / integrate_1d([&a, &x, i](double t) {
      return 1.0 / a->eval(x, i == 0 ? Vec2(t, 0.0) : Vec2(0.0, t))(i, i);
    }, 0.0, 1.0, splits);
  };
  o.A0 = [harmonic](const Vec2& x) {
    Mat2 m = Mat2::Zero();
    m(0, 0) = harmonic(x, 0);
    m(1, 1) = harmonic(x, 1);
    return m;
  };
  o.m_exact = [a, harmonic](const Vec2& x, const Vec2& y) {
    const Mat2 v = a->eval(x, Vec2(frac(y.x()), frac(y.y())));
    return harmonic(x, 0) * harmonic(x, 1) / (v(0, 0) * v(1, 1));
  };
  o.corrector_hessian = [a, harmonic](const Vec2& x, int i, int j, int k, int l, const Vec2& y) {
    if (!(i == j && j == k && k == l)) return 0.0;
    const double aii = a->eval(x, Vec2(frac(y.x()), frac(y.y())))(i, i);
    return (harmonic(x, i) - aii) / aii;
  };
  return o;
}

double KnownSolution::partial(const Vec2& x, int a, int b) const {
  // u0 = p(x1) p(x2) / 2 with p(t) = t^2 - t.
  auto p = [](double t, int d) {
    switch (d) {
      case 0: return t * t - t;
      case 1: return 2.0 * t - 1.0;
      case 2: return 2.0;
      default: return 0.0;
    }
  };
  return 0.5 * p(x.x(), a) * p(x.y(), b);
}

Jet KnownSolution::jet(const Vec2& x, int order) const {
  Jet j;
  j.value = partial(x, 0, 0);
  if (order >= 1) j.grad = Vec2(partial(x, 1, 0), partial(x, 0, 1));
  if (order >= 2) {
    j.hess(0, 0) = partial(x, 2, 0);
    j.hess(1, 1) = partial(x, 0, 2);
    j.hess(0, 1) = j.hess(1, 0) = partial(x, 1, 1);
  }
  return j;
}

JetFunction KnownSolution::as_jet_function() const {
  const KnownSolution self = *this;
  return [self](const Vec2& x, int order) { return self.jet(x, order); };
}

KnownSolution known_u0(const std::string& which) {
  if (which != "paper41" && which != "paper43") throw LookupError("known_u0: no known solution for '" + which + "'");
  return {};
}

ScalarFunction rhs_for_known_u0(const Mat2& a0) {
  const KnownSolution u;
  return [u, a0](const Vec2& x) { return contract(a0, u.jet(x, 2).hess); };
}

ScalarFunction rhs_for_known_u0(std::function<Mat2(const Vec2&)> a0) {
  const KnownSolution u;
  return [u, a0 = std::move(a0)](const Vec2& x) { return contract(a0(x), u.jet(x, 2).hess); };
}

}  // namespace homog
