#include "homog/assembly.hpp"

#include "homog/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace homog {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

int default_degree(const FeSpace& s, const AssemblyOptions& opt) {
  if (opt.quad_degree > 0) return opt.quad_degree;
  return s.kind() == SpaceKind::HCT ? 6 : 4;
}

void require_same_mesh(const FeSpace& a, const FeSpace& b) {
  if (&a.mesh() != &b.mesh() && a.mesh().hash() != b.mesh().hash())
    throw MeshMismatch("test and trial spaces live on different meshes");
}

void require_hessian(const FeSpace& s, const char* what) {
  if (!s.has_second_derivatives())
    throw CapabilityError(std::string(what) + " needs an H2-conforming (HCT) space, got " + to_string(s.kind()));
}

int pieces_of(const FeSpace& a, const FeSpace& b) { return std::max(a.n_pieces(), b.n_pieces()); }

std::array<Vec2, 3> piece_of(const FeSpace& a, const FeSpace& b, int t, int p) {
  return a.kind() == SpaceKind::HCT ? a.piece_corners(t, p) : b.piece_corners(t, p);
}

// CSR pattern of the test-by-trial coupling graph.
SpMat make_pattern(const FeSpace& test, const FeSpace& trial) {
  const int nt = static_cast<int>(test.mesh().n_triangles());
  std::vector<std::vector<int>> adj(test.n_dofs());
  int rd[12], cd[12];
  for (int t = 0; t < nt; ++t) {
    test.local_dofs(t, rd);
    trial.local_dofs(t, cd);
    for (int i = 0; i < test.n_local(); ++i)
      for (int j = 0; j < trial.n_local(); ++j) adj[rd[i]].push_back(cd[j]);
  }
  SpMat K(test.n_dofs(), trial.n_dofs());
  Eigen::VectorXi nnz(test.n_dofs());
  for (std::size_t r = 0; r < adj.size(); ++r) {
    auto& a = adj[r];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    nnz[static_cast<int>(r)] = static_cast<int>(a.size());
  }
  K.reserve(nnz.sum());
  for (std::size_t r = 0; r < adj.size(); ++r) {
    K.startVec(static_cast<int>(r));
    for (int c : adj[r]) K.insertBack(static_cast<int>(r), c) = 0.0;
    std::vector<int>().swap(adj[r]);
  }
  K.finalize();
  return K;
}

int bilinear_order(const std::vector<BilinearTerm>& terms) {
  int order = 0;
  for (const auto& t : terms)
    std::visit(Overloaded{[&](const form::Mass&) {},
                          [&](const form::GradAGrad&) { order = std::max(order, 1); },
                          [&](const form::UDivAGrad&) { order = std::max(order, 1); },
                          [&](const form::DivAGradU&) { order = std::max(order, 1); },
                          [&](const form::HessContractPair&) { order = 2; },
                          [&](const form::CordesLS&) { order = 2; }},
               t);
  return order;
}

int linear_order(const std::vector<LinearTerm>& terms) {
  int order = 0;
  for (const auto& t : terms)
    std::visit(Overloaded{[&](const form::Load&) {}, [&](const form::LineLoad&) {},
                          [&](const form::LoadGrad&) { order = std::max(order, 1); },
                          [&](const form::LoadAgainstContract&) { order = 2; },
                          [&](const form::LoadAgainstLaplacian&) { order = 2; }},
               t);
  return order;
}

// Clip triangle c against {x_axis = level}. Returns the number of segment
// endpoints (0 or 2) and a weight of 1/2 when the segment is a triangle edge.
int clip_line(const std::array<Vec2, 3>& c, int axis, double level, Vec2& a, Vec2& b, double& weight) {
  const double scale = std::max({std::abs(c[0][axis]), std::abs(c[1][axis]), std::abs(c[2][axis]), 1.0});
  const double tol = 1e-12 * scale;
  double d[3];
  int on = 0;
  for (int i = 0; i < 3; ++i) {
    d[i] = c[i][axis] - level;
    if (std::abs(d[i]) <= tol) {
      d[i] = 0.0;
      ++on;
    }
  }
  weight = 1.0;
  if (on >= 2) {
    int k = 0;
    Vec2 pts[2];
    for (int i = 0; i < 3 && k < 2; ++i)
      if (d[i] == 0.0) pts[k++] = c[i];
    a = pts[0];
    b = pts[1];
    weight = 0.5;
    return 2;
  }
  Vec2 pts[3];
  int k = 0;
  for (int i = 0; i < 3; ++i)
    if (d[i] == 0.0) pts[k++] = c[i];
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    if ((d[i] < 0.0 && d[j] > 0.0) || (d[i] > 0.0 && d[j] < 0.0)) {
      const double s = d[i] / (d[i] - d[j]);
      pts[k++] = c[i] + s * (c[j] - c[i]);
    }
  }
  if (k != 2) return 0;
  a = pts[0];
  b = pts[1];
  return 2;
}

}  // namespace

SpMat assemble_matrix(const FeSpace& test, const FeSpace& trial, const std::vector<BilinearTerm>& terms,
                      const AssemblyOptions& opt) {
  require_same_mesh(test, trial);
  const int order = bilinear_order(terms);
  if (order >= 2) {
    require_hessian(test, "second-order form");
    require_hessian(trial, "second-order form");
  }
  SpMat K = make_pattern(test, trial);
  const auto& mesh = test.mesh();
  const auto& rule = triangle_rule(std::max(default_degree(test, opt), default_degree(trial, opt)));
  const int npieces = pieces_of(test, trial);
  const bool same = &test == &trial;

  BasisValues bt, bu;
  int rd[12], cd[12];
  Eigen::Matrix<double, 12, 12> Ke;
  for (int t = 0; t < static_cast<int>(mesh.n_triangles()); ++t) {
    const int nr = test.n_local(), nc = trial.n_local();
    Ke.setZero();
    const double area = mesh.area(t) / npieces;
    for (int p = 0; p < npieces; ++p) {
      const auto c = piece_of(test, trial, t, p);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const auto& l = rule.points[q];
        const QPoint qp{l[0] * c[0] + l[1] * c[1] + l[2] * c[2], t, p};
        const double w = rule.weights[q] * area;
        test.eval_basis(t, qp.x, order, bt, test.kind() == SpaceKind::HCT ? p : -1);
        const BasisValues* bu_ptr = &bt;
        if (!same) {
          trial.eval_basis(t, qp.x, order, bu, trial.kind() == SpaceKind::HCT ? p : -1);
          bu_ptr = &bu;
        }
        const BasisValues& bu_ref = *bu_ptr;
        for (const auto& term : terms) {
          std::visit(
              Overloaded{
                  [&](const form::GradAGrad& f) {
                    const Mat2 A = f.A(qp);
                    for (int j = 0; j < nc; ++j) {
                      const Vec2 Ag = w * (A * bu_ref.g[j]);
                      for (int i = 0; i < nr; ++i) Ke(i, j) += Ag.dot(bt.g[i]);
                    }
                  },
                  [&](const form::UDivAGrad& f) {
                    const Vec2 b = w * f.b(qp);
                    for (int i = 0; i < nr; ++i) {
                      const double bg = b.dot(bt.g[i]);
                      for (int j = 0; j < nc; ++j) Ke(i, j) += bu_ref.v[j] * bg;
                    }
                  },
                  [&](const form::DivAGradU& f) {
                    const Vec2 b = w * f.b(qp);
                    for (int j = 0; j < nc; ++j) {
                      const double bg = b.dot(bu_ref.g[j]);
                      for (int i = 0; i < nr; ++i) Ke(i, j) += bg * bt.v[i];
                    }
                  },
                  [&](const form::Mass& f) {
                    const double cw = w * (f.c ? f.c(qp) : 1.0);
                    for (int j = 0; j < nc; ++j)
                      for (int i = 0; i < nr; ++i) Ke(i, j) += cw * bu_ref.v[j] * bt.v[i];
                  },
                  [&](const form::HessContractPair& f) {
                    const Mat2 M = f.M(qp);
                    const Mat2 N = f.N ? f.N(qp) : M;
                    const double ww = w * (f.w ? f.w(qp) : 1.0);
                    double mu[12], nv[12];
                    for (int j = 0; j < nc; ++j) mu[j] = contract(M, bu_ref.h[j]);
                    for (int i = 0; i < nr; ++i) nv[i] = contract(N, bt.h[i]);
                    for (int j = 0; j < nc; ++j)
                      for (int i = 0; i < nr; ++i) Ke(i, j) += ww * mu[j] * nv[i];
                  },
                  [&](const form::CordesLS& f) {
                    const Mat2 A = f.A(qp);
                    const double g = w * f.gamma(qp);
                    double au[12], lv[12];
                    for (int j = 0; j < nc; ++j) au[j] = contract(A, bu_ref.h[j]);
                    for (int i = 0; i < nr; ++i) lv[i] = bt.h[i].trace();
                    for (int j = 0; j < nc; ++j)
                      for (int i = 0; i < nr; ++i) Ke(i, j) += g * au[j] * lv[i];
                  }},
              term);
        }
      }
    }
    test.local_dofs(t, rd);
    trial.local_dofs(t, cd);
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nc; ++j) K.coeffRef(rd[i], cd[j]) += Ke(i, j);
  }
  return K;
}

Eigen::VectorXd assemble_vector(const FeSpace& test, const std::vector<LinearTerm>& terms,
                                const AssemblyOptions& opt) {
  const int order = linear_order(terms);
  if (order >= 2) require_hessian(test, "second-order load");
  const auto& mesh = test.mesh();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(test.n_dofs());
  const auto& rule = triangle_rule(default_degree(test, opt));
  const int npieces = test.n_pieces();
  const int nr = test.n_local();

  std::vector<const form::LineLoad*> lines;
  bool has_area_terms = false;
  for (const auto& t : terms) {
    if (const auto* l = std::get_if<form::LineLoad>(&t)) lines.push_back(l);
    else has_area_terms = true;
  }

  BasisValues bt;
  int rd[12];
  Eigen::Matrix<double, 12, 1> Fe;
  for (int t = 0; t < static_cast<int>(mesh.n_triangles()); ++t) {
    Fe.setZero();
    const double area = mesh.area(t) / npieces;
    for (int p = 0; p < npieces; ++p) {
      const auto c = test.piece_corners(t, p);
      const int piece_arg = test.kind() == SpaceKind::HCT ? p : -1;
      if (has_area_terms) {
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          const auto& l = rule.points[q];
          const QPoint qp{l[0] * c[0] + l[1] * c[1] + l[2] * c[2], t, p};
          const double w = rule.weights[q] * area;
          test.eval_basis(t, qp.x, order, bt, piece_arg);
          for (const auto& term : terms) {
            std::visit(Overloaded{[&](const form::Load& f) {
                                    const double fw = w * f.f(qp);
                                    for (int i = 0; i < nr; ++i) Fe[i] += fw * bt.v[i];
                                  },
                                  [&](const form::LoadGrad& f) {
                                    const Vec2 g = w * f.g(qp);
                                    for (int i = 0; i < nr; ++i) Fe[i] += g.dot(bt.g[i]);
                                  },
                                  [&](const form::LoadAgainstContract& f) {
                                    const Mat2 M = f.M(qp);
                                    const double fw = w * f.f(qp) * (f.w ? f.w(qp) : 1.0);
                                    for (int i = 0; i < nr; ++i) Fe[i] += fw * contract(M, bt.h[i]);
                                  },
                                  [&](const form::LoadAgainstLaplacian& f) {
                                    const double fw = w * f.f(qp) * f.gamma(qp);
                                    for (int i = 0; i < nr; ++i) Fe[i] += fw * bt.h[i].trace();
                                  },
                                  [&](const form::LineLoad&) {}},
                       term);
          }
        }
      }
      for (const auto* line : lines) {
        const int ax = line->axis;
        const double lo = std::min({c[0][ax], c[1][ax], c[2][ax]});
        const double hi = std::max({c[0][ax], c[1][ax], c[2][ax]});
        const double tol = 1e-12 * std::max(1.0, std::abs(hi));
        const long long k0 = static_cast<long long>(std::ceil((lo - tol - line->position) / line->period));
        const long long k1 = static_cast<long long>(std::floor((hi + tol - line->position) / line->period));
        for (long long k = k0; k <= k1; ++k) {
          Vec2 a, b;
          double weight = 1.0;
          if (clip_line(c, ax, line->position + k * line->period, a, b, weight) != 2) continue;
          const double len = (b - a).norm();
          if (len <= 0.0) continue;
          static const double gx[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263};
          static const double gw[4] = {0.1739274225658950, 0.3260725774341050, 0.3260725774341050, 0.1739274225658950};
          for (int q = 0; q < 4; ++q) {
            const QPoint qp{a + gx[q] * (b - a), t, p};
            test.eval_basis(t, qp.x, 0, bt, piece_arg);
            const double gw_q = weight * gw[q] * len * line->g(qp);
            for (int i = 0; i < nr; ++i) Fe[i] += gw_q * bt.v[i];
          }
        }
      }
    }
    test.local_dofs(t, rd);
    for (int i = 0; i < nr; ++i) F[rd[i]] += Fe[i];
  }
  return F;
}

Eigen::VectorXd basis_integrals(const FeSpace& space) {
  return assemble_vector(space, {form::Load{[](const QPoint&) { return 1.0; }}});
}

ConstrainedSystem apply_constraints(FeSpacePtr space, const SpMat& K, const Eigen::VectorXd& F,
                                    const Eigen::VectorXd* fixed_values, bool symmetric) {
  const auto& si = space->system_index();
  const int n = space->n_dofs();
  if (K.rows() != n || K.cols() != n || F.size() != n) throw InvalidArgument("apply_constraints: size mismatch");
  ConstrainedSystem cs;
  cs.space = space;
  cs.fixed_values = fixed_values ? *fixed_values : Eigen::VectorXd::Zero(n);
  cs.bordered = space->constraint() == Constraint::ZeroMean;
  const int nf = space->n_free();
  const int N = nf + (cs.bordered ? 1 : 0);

  Eigen::VectorXd border;
  if (cs.bordered) border = basis_integrals(*space);

  SpMat A(N, N);
  Eigen::VectorXi nnz = Eigen::VectorXi::Zero(N);
  for (int r = 0; r < n; ++r) {
    if (si[r] < 0) continue;
    nnz[si[r]] = static_cast<int>(K.outerIndexPtr()[r + 1] - K.outerIndexPtr()[r]) + (cs.bordered ? 1 : 0);
  }
  if (cs.bordered) nnz[nf] = nf;
  A.reserve(nnz.sum());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
  for (int r = 0; r < n; ++r) {
    if (si[r] < 0) continue;
    const int row = si[r];
    A.startVec(row);
    double lift = 0.0;
    for (SpMat::InnerIterator it(K, r); it; ++it) {
      const int c = static_cast<int>(it.col());
      if (si[c] >= 0) A.insertBack(row, si[c]) = it.value();
      else lift += it.value() * cs.fixed_values[c];
    }
    if (cs.bordered) A.insertBack(row, nf) = border[r];
    rhs[row] = F[r] - lift;
  }
  if (cs.bordered) {
    A.startVec(nf);
    for (int r = 0; r < n; ++r)
      if (si[r] >= 0) A.insertBack(nf, si[r]) = border[r];
  }
  A.finalize();
  cs.system.matrix = std::move(A);
  cs.system.rhs = std::move(rhs);
  cs.system.symmetric = symmetric;
  return cs;
}

Eigen::VectorXd recover(const ConstrainedSystem& cs, const Eigen::VectorXd& x) {
  const auto& si = cs.space->system_index();
  Eigen::VectorXd u(cs.space->n_dofs());
  for (int d = 0; d < cs.space->n_dofs(); ++d) u[d] = si[d] >= 0 ? x[si[d]] : cs.fixed_values[d];
  return u;
}

}  // namespace homog
