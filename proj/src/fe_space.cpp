#include "homog/fe_space.hpp"

#include "homog/quadrature.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace homog {

std::string to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::P1PerZeroMean: return "P1PerZeroMean";
    case SpaceKind::P1: return "P1";
    case SpaceKind::P2: return "P2";
    case SpaceKind::HCT: return "HCT";
  }
  return "?";
}

SpaceKind space_kind_from_string(const std::string& s) {
  if (s == "P1PerZeroMean") return SpaceKind::P1PerZeroMean;
  if (s == "P1") return SpaceKind::P1;
  if (s == "P2") return SpaceKind::P2;
  if (s == "HCT") return SpaceKind::HCT;
  throw ParseError("unknown space kind '" + s + "'", 0);
}

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::None: return "none";
    case Constraint::ZeroMean: return "zero_mean";
    case Constraint::DirichletZero: return "dirichlet_zero";
    case Constraint::DirichletZeroWithBoundaryGradient: return "dirichlet_zero_gradient";
  }
  return "?";
}

Constraint constraint_from_string(const std::string& s) {
  for (Constraint c : {Constraint::None, Constraint::ZeroMean, Constraint::DirichletZero,
                       Constraint::DirichletZeroWithBoundaryGradient})
    if (to_string(c) == s) return c;
  throw ParseError("unknown constraint '" + s + "'", 0);
}

namespace {

Vec2 rot_cw(const Vec2& v) { return Vec2(v.y(), -v.x()); }

// Barycentric gradients of a triangle.
std::array<Vec2, 3> bary_gradients(const std::array<Vec2, 3>& p, double area) {
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2 e = p[(i + 2) % 3] - p[(i + 1) % 3];
    g[i] = Vec2(-e.y(), e.x()) / (2.0 * area);
  }
  return g;
}

// Cubic monomials 1, x, y, x^2, xy, y^2, x^3, x^2y, xy^2, y^3 and derivatives.
struct Monomials {
  double v[10];
  double gx[10], gy[10];
  double hxx[10], hxy[10], hyy[10];
};

void monomials(const Vec2& p, int order, Monomials& m) {
  const double x = p.x(), y = p.y();
  const double xx = x * x, xy = x * y, yy = y * y;
  m.v[0] = 1; m.v[1] = x; m.v[2] = y; m.v[3] = xx; m.v[4] = xy; m.v[5] = yy;
  m.v[6] = xx * x; m.v[7] = xx * y; m.v[8] = x * yy; m.v[9] = yy * y;
  if (order < 1) return;
  m.gx[0] = 0; m.gx[1] = 1; m.gx[2] = 0; m.gx[3] = 2 * x; m.gx[4] = y; m.gx[5] = 0;
  m.gx[6] = 3 * xx; m.gx[7] = 2 * xy; m.gx[8] = yy; m.gx[9] = 0;
  m.gy[0] = 0; m.gy[1] = 0; m.gy[2] = 1; m.gy[3] = 0; m.gy[4] = x; m.gy[5] = 2 * y;
  m.gy[6] = 0; m.gy[7] = xx; m.gy[8] = 2 * xy; m.gy[9] = 3 * yy;
  if (order < 2) return;
  m.hxx[0] = 0; m.hxx[1] = 0; m.hxx[2] = 0; m.hxx[3] = 2; m.hxx[4] = 0; m.hxx[5] = 0;
  m.hxx[6] = 6 * x; m.hxx[7] = 2 * y; m.hxx[8] = 0; m.hxx[9] = 0;
  m.hxy[0] = 0; m.hxy[1] = 0; m.hxy[2] = 0; m.hxy[3] = 0; m.hxy[4] = 1; m.hxy[5] = 0;
  m.hxy[6] = 0; m.hxy[7] = 2 * x; m.hxy[8] = 2 * y; m.hxy[9] = 0;
  m.hyy[0] = 0; m.hyy[1] = 0; m.hyy[2] = 0; m.hyy[3] = 0; m.hyy[4] = 0; m.hyy[5] = 2;
  m.hyy[6] = 0; m.hyy[7] = 0; m.hyy[8] = 2 * x; m.hyy[9] = 6 * y;
}

// HCT coefficient matrix in scaled coordinates for a triangle with corners
// xi[0..2] (centroid at the origin) and canonical edge normals n[0..2].
Eigen::Matrix<double, 30, 12> hct_coefficients(const std::array<Vec2, 3>& xi, const std::array<Vec2, 3>& n) {
  Eigen::Matrix<double, 36, 30> C = Eigen::Matrix<double, 36, 30>::Zero();
  Monomials m;
  int row = 0;
  for (int j = 0; j < 3; ++j) {
    const int a = (j + 1) % 3, b = (j + 2) % 3;
    for (int s = 0; s <= 3; ++s) {
      monomials(xi[j] * (s / 3.0), 1, m);
      for (int k = 0; k < 10; ++k) {
        C(row, 10 * a + k) = m.v[k];
        C(row, 10 * b + k) = -m.v[k];
        C(row + 1, 10 * a + k) = m.gx[k];
        C(row + 1, 10 * b + k) = -m.gx[k];
        C(row + 2, 10 * a + k) = m.gy[k];
        C(row + 2, 10 * b + k) = -m.gy[k];
      }
      row += 3;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv[17] > 1e-8 * sv[0]) || sv[18] > 1e-9 * sv[0])
    throw Error("HCT: unexpected dimension of the C1 subspace on a degenerate triangle");
  const Eigen::Matrix<double, 30, 12> N = svd.matrixV().rightCols(12);

  Eigen::Matrix<double, 12, 30> D = Eigen::Matrix<double, 12, 30>::Zero();
  for (int j = 0; j < 3; ++j) {
    const int b = (j + 1) % 3;
    monomials(xi[j], 1, m);
    for (int k = 0; k < 10; ++k) {
      D(3 * j, 10 * b + k) = m.v[k];
      D(3 * j + 1, 10 * b + k) = m.gx[k];
      D(3 * j + 2, 10 * b + k) = m.gy[k];
    }
  }
  for (int e = 0; e < 3; ++e) {
    monomials(0.5 * (xi[(e + 1) % 3] + xi[(e + 2) % 3]), 1, m);
    for (int k = 0; k < 10; ++k) D(9 + e, 10 * e + k) = m.gx[k] * n[e].x() + m.gy[k] * n[e].y();
  }
  const Eigen::Matrix<double, 12, 12> DN = D * N;
  return N * DN.inverse();
}

}  // namespace

std::shared_ptr<const FeSpace> FeSpace::create(SpaceKind kind, std::shared_ptr<const TriMesh> mesh,
                                               Constraint constraint) {
  if (!mesh) throw InvalidArgument("FeSpace: null mesh");
  return std::shared_ptr<const FeSpace>(new FeSpace(kind, std::move(mesh), constraint));
}

FeSpace::FeSpace(SpaceKind kind, std::shared_ptr<const TriMesh> mesh, Constraint constraint)
    : kind_(kind), constraint_(constraint), mesh_(std::move(mesh)) {
  const int nv = static_cast<int>(mesh_->n_vertices());
  const int ne = static_cast<int>(mesh_->n_edges());
  switch (kind_) {
    case SpaceKind::P1PerZeroMean:
      if (constraint_ != Constraint::ZeroMean && constraint_ != Constraint::None)
        throw InvalidArgument("P1PerZeroMean carries the zero-mean constraint only");
      constraint_ = Constraint::ZeroMean;
      pairing_ = periodic_pairing(*mesh_);
      n_dofs_ = pairing_->n_free;
      n_local_ = 3;
      break;
    case SpaceKind::P1:
      n_dofs_ = nv;
      n_local_ = 3;
      break;
    case SpaceKind::P2:
      n_dofs_ = nv + ne;
      n_local_ = 6;
      break;
    case SpaceKind::HCT:
      n_dofs_ = 3 * nv + ne;
      n_local_ = 12;
      build_hct();
      break;
  }
  if (constraint_ == Constraint::DirichletZeroWithBoundaryGradient && kind_ != SpaceKind::HCT)
    throw CapabilityError("boundary-gradient constraint requires an HCT space");
  if (constraint_ == Constraint::ZeroMean && kind_ != SpaceKind::P1PerZeroMean)
    throw CapabilityError("zero-mean constraint is only available on the periodic P1 space");
  build_constraints();
}

void FeSpace::build_hct() {
  const int nt = static_cast<int>(mesh_->n_triangles());
  hct_shape_of_.resize(nt);
  hct_center_.resize(nt);
  hct_scale_.resize(nt);
  using Key = std::tuple<long long, long long, long long, long long, long long, long long, int>;
  std::map<Key, int> cache;
  for (int t = 0; t < nt; ++t) {
    const auto p = mesh_->corners(t);
    const auto& tri = mesh_->triangles()[t];
    const Vec2 g = (p[0] + p[1] + p[2]) / 3.0;
    const double s = std::max({(p[1] - p[0]).norm(), (p[2] - p[1]).norm(), (p[0] - p[2]).norm()});
    std::array<Vec2, 3> xi;
    for (int j = 0; j < 3; ++j) xi[j] = (p[j] - g) / s;
    int bits = 0;
    std::array<Vec2, 3> nrm;
    for (int k = 0; k < 3; ++k) {
      const int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
      const Vec2 outward = rot_cw(p[(k + 2) % 3] - p[(k + 1) % 3]).normalized();
      nrm[k] = a < b ? outward : Vec2(-outward);
      if (a < b) bits |= 1 << k;
    }
    auto q = [](double v) { return std::llround(v * 1e9); };
    const Key key{q(xi[0].x()), q(xi[0].y()), q(xi[1].x()), q(xi[1].y()), q(xi[2].x()), q(xi[2].y()), bits};
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, static_cast<int>(hct_shapes_.size())).first;
      hct_shapes_.push_back(HctShape{hct_coefficients(xi, nrm)});
    }
    hct_shape_of_[t] = it->second;
    hct_center_[t] = g;
    hct_scale_[t] = s;
  }
}

void FeSpace::build_constraints() {
  fixed_.assign(n_dofs_, false);
  const auto& X = mesh_->vertices();
  const int nv = static_cast<int>(X.size());
  const bool dirichlet =
      constraint_ == Constraint::DirichletZero || constraint_ == Constraint::DirichletZeroWithBoundaryGradient;
  if (dirichlet) {
    const Box& box = mesh_->domain_box();
    const double tol = 1e-12 * std::max(1.0, (box.hi - box.lo).norm());
    for (int v = 0; v < nv; ++v) {
      if (mesh_->vertex_boundary_mask(v) == 0) continue;
      if (kind_ != SpaceKind::HCT) {
        fixed_[v] = true;
        continue;
      }
      fixed_[3 * v] = true;
      const bool on_vertical = std::abs(X[v].x() - box.lo.x()) < tol || std::abs(X[v].x() - box.hi.x()) < tol;
      const bool on_horizontal = std::abs(X[v].y() - box.lo.y()) < tol || std::abs(X[v].y() - box.hi.y()) < tol;
      const bool all = constraint_ == Constraint::DirichletZeroWithBoundaryGradient;
      if (on_horizontal || all) fixed_[3 * v + 1] = true;
      if (on_vertical || all) fixed_[3 * v + 2] = true;
    }
    for (int e = 0; e < static_cast<int>(mesh_->n_edges()); ++e) {
      if (mesh_->edge_tag(e) == 0) continue;
      if (kind_ == SpaceKind::P2) fixed_[nv + e] = true;
      if (kind_ == SpaceKind::HCT && constraint_ == Constraint::DirichletZeroWithBoundaryGradient)
        fixed_[3 * nv + e] = true;
    }
  }
  system_index_.assign(n_dofs_, -1);
  n_free_ = 0;
  for (int d = 0; d < n_dofs_; ++d)
    if (!fixed_[d]) system_index_[d] = n_free_++;
}

void FeSpace::local_dofs(int t, int* out) const {
  const auto& tri = mesh_->triangles()[t];
  switch (kind_) {
    case SpaceKind::P1PerZeroMean:
      for (int k = 0; k < 3; ++k) out[k] = pairing_->free_index[tri[k]];
      return;
    case SpaceKind::P1:
      for (int k = 0; k < 3; ++k) out[k] = tri[k];
      return;
    case SpaceKind::P2: {
      const int nv = static_cast<int>(mesh_->n_vertices());
      const auto& te = mesh_->triangle_edges(t);
      for (int k = 0; k < 3; ++k) {
        out[k] = tri[k];
        out[3 + k] = nv + te[k];
      }
      return;
    }
    case SpaceKind::HCT: {
      const int nv = static_cast<int>(mesh_->n_vertices());
      const auto& te = mesh_->triangle_edges(t);
      for (int k = 0; k < 3; ++k) {
        out[3 * k] = 3 * tri[k];
        out[3 * k + 1] = 3 * tri[k] + 1;
        out[3 * k + 2] = 3 * tri[k] + 2;
        out[9 + k] = 3 * nv + te[k];
      }
      return;
    }
  }
}

int FeSpace::hct_piece(int t, const Vec2& x) const {
  const auto lam = mesh_->barycentric(t, x);
  int k = 0;
  lam.minCoeff(&k);
  return k;
}

std::array<Vec2, 3> FeSpace::piece_corners(int t, int p) const {
  const auto c = mesh_->corners(t);
  if (kind_ != SpaceKind::HCT) return c;
  return {hct_center_[t], c[(p + 1) % 3], c[(p + 2) % 3]};
}

Vec2 FeSpace::edge_normal(int e) const {
  const auto& ed = mesh_->edges()[e];
  return rot_cw(mesh_->vertices()[ed[1]] - mesh_->vertices()[ed[0]]).normalized();
}

Vec2 FeSpace::wrap(const Vec2& x) const {
  if (!periodic()) return x;
  const Box& b = mesh_->domain_box();
  Vec2 y = x;
  for (int i = 0; i < 2; ++i) {
    const double L = b.hi[i] - b.lo[i];
    y[i] = x[i] - std::floor((x[i] - b.lo[i]) / L) * L;
    if (y[i] >= b.hi[i]) y[i] = b.lo[i];
  }
  return y;
}

void FeSpace::eval_basis(int t, const Vec2& x, int order, BasisValues& out, int piece) const {
  out.n = n_local_;
  if (kind_ == SpaceKind::HCT) {
    const int p = piece >= 0 ? piece : hct_piece(t, x);
    const double s = hct_scale_[t];
    const auto& B = hct_shapes_[hct_shape_of_[t]].B;
    Monomials m;
    monomials((x - hct_center_[t]) / s, order, m);
    for (int i = 0; i < 12; ++i) {
      const double scale = (i >= 9 || i % 3 != 0) ? s : 1.0;
      double v = 0, gx = 0, gy = 0, hxx = 0, hxy = 0, hyy = 0;
      for (int k = 0; k < 10; ++k) {
        const double c = B(10 * p + k, i);
        v += c * m.v[k];
        if (order >= 1) {
          gx += c * m.gx[k];
          gy += c * m.gy[k];
        }
        if (order >= 2) {
          hxx += c * m.hxx[k];
          hxy += c * m.hxy[k];
          hyy += c * m.hyy[k];
        }
      }
      out.v[i] = scale * v;
      if (order >= 1) out.g[i] = Vec2(gx, gy) * (scale / s);
      if (order >= 2) {
        out.h[i] << hxx, hxy, hxy, hyy;
        out.h[i] *= scale / (s * s);
      }
    }
    return;
  }

  const auto c = mesh_->corners(t);
  const auto lam = mesh_->barycentric(t, x);
  const auto gl = bary_gradients(c, mesh_->area(t));
  if (kind_ != SpaceKind::P2) {
    for (int i = 0; i < 3; ++i) {
      out.v[i] = lam[i];
      out.g[i] = gl[i];
      out.h[i].setZero();
    }
    return;
  }
  for (int i = 0; i < 3; ++i) {
    out.v[i] = lam[i] * (2.0 * lam[i] - 1.0);
    out.g[i] = (4.0 * lam[i] - 1.0) * gl[i];
    out.h[i] = 4.0 * gl[i] * gl[i].transpose();
    const int a = (i + 1) % 3, b = (i + 2) % 3;
    out.v[3 + i] = 4.0 * lam[a] * lam[b];
    out.g[3 + i] = 4.0 * (lam[a] * gl[b] + lam[b] * gl[a]);
    out.h[3 + i] = 4.0 * (gl[a] * gl[b].transpose() + gl[b] * gl[a].transpose());
  }
}

// ---------------------------------------------------------------------------

FeFunction::FeFunction(FeSpacePtr space, Eigen::VectorXd coeffs) : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (!space_) throw InvalidArgument("FeFunction: null space");
  if (coeffs_.size() != space_->n_dofs())
    throw InvalidArgument("FeFunction: coefficient length " + std::to_string(coeffs_.size()) +
                          " does not match n_dofs " + std::to_string(space_->n_dofs()));
}

Jet FeFunction::eval_in_element(int t, const Vec2& x, int order, int piece) const {
  BasisValues bv;
  space_->eval_basis(t, x, order, bv, piece);
  int dofs[12];
  space_->local_dofs(t, dofs);
  Jet j;
  for (int i = 0; i < bv.n; ++i) {
    const double c = coeffs_[dofs[i]];
    j.value += c * bv.v[i];
    if (order >= 1) j.grad += c * bv.g[i];
    if (order >= 2) j.hess += c * bv.h[i];
  }
  return j;
}

Jet FeFunction::jet(const Vec2& x, int order, int* hint) const {
  const Vec2 y = space_->wrap(x);
  const int t = space_->mesh().locate(y, hint ? *hint : -1);
  if (hint) *hint = t;
  return eval_in_element(t, y, order);
}

Mat2 FeFunction::hessian(const Vec2& x) const { return jet(x, 2).hess; }

double FeFunction::integral() const {
  const auto& rule = triangle_rule(std::max(1, space_->degree()));
  const auto& mesh = space_->mesh();
  double sum = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.n_triangles()); ++t)
    for (int p = 0; p < space_->n_pieces(); ++p) {
      const auto c = space_->piece_corners(t, p);
      const double area = mesh.area(t) / space_->n_pieces();
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const auto& b = rule.points[q];
        const Vec2 x = b[0] * c[0] + b[1] * c[1] + b[2] * c[2];
        sum += rule.weights[q] * area * eval_in_element(t, x, 0, space_->kind() == SpaceKind::HCT ? p : -1).value;
      }
    }
  return sum;
}

JetFunction FeFunction::as_jet_function() const {
  auto self = std::make_shared<const FeFunction>(*this);
  return [self](const Vec2& x, int order) { return self->jet(x, order); };
}

FeFunction interpolate(FeSpacePtr space, const JetFunction& f) {
  const auto& mesh = space->mesh();
  const auto& X = mesh.vertices();
  const int nv = static_cast<int>(X.size());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(space->n_dofs());
  switch (space->kind()) {
    case SpaceKind::P1PerZeroMean:
      for (int v = 0; v < nv; ++v)
        if (space->pairing()->is_master(v)) c[space->pairing()->free_index[v]] = f(X[v], 0).value;
      break;
    case SpaceKind::P1:
      for (int v = 0; v < nv; ++v) c[v] = f(X[v], 0).value;
      break;
    case SpaceKind::P2:
      for (int v = 0; v < nv; ++v) c[v] = f(X[v], 0).value;
      for (int e = 0; e < static_cast<int>(mesh.n_edges()); ++e) {
        const auto& ed = mesh.edges()[e];
        c[nv + e] = f(0.5 * (X[ed[0]] + X[ed[1]]), 0).value;
      }
      break;
    case SpaceKind::HCT:
      for (int v = 0; v < nv; ++v) {
        const Jet j = f(X[v], 1);
        c[3 * v] = j.value;
        c[3 * v + 1] = j.grad.x();
        c[3 * v + 2] = j.grad.y();
      }
      for (int e = 0; e < static_cast<int>(mesh.n_edges()); ++e) {
        const auto& ed = mesh.edges()[e];
        c[3 * nv + e] = f(0.5 * (X[ed[0]] + X[ed[1]]), 1).grad.dot(space->edge_normal(e));
      }
      break;
  }
  return FeFunction(std::move(space), std::move(c));
}

FeFunction interpolate(FeSpacePtr space, const ScalarFunction& f) {
  if (space->kind() == SpaceKind::HCT)
    throw CapabilityError("HCT interpolation needs gradients; pass a JetFunction");
  return interpolate(std::move(space), JetFunction([&f](const Vec2& x, int) {
                       Jet j;
                       j.value = f(x);
                       return j;
                     }));
}

}  // namespace homog
