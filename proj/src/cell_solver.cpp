#include "homog/cell_solver.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace homog {

bool HomogenizedMatrix::elliptic() const {
  Eigen::SelfAdjointEigenSolver<Mat2> es(entries);
  return std::abs(entries(0, 1) - entries(1, 0)) <= 1e-12 * entries.norm() && es.eigenvalues().minCoeff() > 0.0;
}

FeSpacePtr cell_space(const TriMesh& mesh) {
  return FeSpace::create(SpaceKind::P1PerZeroMean, std::make_shared<const TriMesh>(mesh));
}

namespace {

Eigen::VectorXd bordered_rhs(const Eigen::VectorXd& F) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(F.size() + 1);
  rhs.head(F.size()) = F;
  return rhs;
}

// Gradient of an FE function inside the element carrying the integration point.
Vec2 grad_at(const FeFunction& f, const QPoint& q) { return f.eval_in_element(q.element, q.x, 1).grad; }

// The periodic kinks of A across which d_axis A jumps.
struct KinkTerm {
  int axis;
  double position;
  Mat2 jump;
};

std::vector<KinkTerm> kink_terms(const CellCoefficient& a) {
  std::vector<KinkTerm> out;
  for (const auto& k : a.kinks()) out.push_back({k.axis, k.position, k.jump});
  return out;
}

void require_second_derivatives(const CellCoefficient& a) {
  if (!a.has_second_derivatives())
    throw CapabilityError("derivative lift needs a W2,inf coefficient with second derivatives, '" + a.info().name +
                          "' does not provide them");
}

// Weak form of d_s A : D2 w for a P1 function w, tested against phi:
// -int d_s A grad w . grad phi - int (div d_s A . grad w) phi, with the line
// part of div d_s A on kinks across which d_s A jumps.
void add_weak_contract(std::vector<LinearTerm>& terms, const CellCoefficient& a, const FeFunction& w, int s,
                       double factor) {
  terms.push_back(form::LoadGrad{[&a, &w, s, factor](const QPoint& q) {
    return Vec2(-factor * (a.grad(q.x, s) * grad_at(w, q)));
  }});
  terms.push_back(form::Load{[&a, &w, s, factor](const QPoint& q) {
    return -factor * a.div_grad(q.x, s).dot(grad_at(w, q));
  }});
  for (const auto& k : kink_terms(a)) {
    if (k.axis != s) continue;
    const Vec2 col = k.jump.col(k.axis);
    terms.push_back(form::LineLoad{k.axis, k.position, 1.0, [&w, col, factor](const QPoint& q) {
                                     return -factor * col.dot(grad_at(w, q));
                                   }});
  }
}

}  // namespace

CellOperator::CellOperator(CellCoefficientPtr a, FeSpacePtr space, const SolveOptions& opt)
    : a_(std::move(a)), space_(std::move(space)), opt_(opt) {
  if (!space_->periodic()) throw InvalidArgument("cell problems need a periodic zero-mean P1 space");
  const CellCoefficient& A = *a_;
  const QMatrix Aq = [&A](const QPoint& q) { return A.eval(q.x); };
  const QVector divq = [&A](const QPoint& q) { return A.div(q.x); };

  // int (A grad m + m div A) . grad phi: rows are test functions.
  const SpMat K = assemble_matrix(*space_, *space_, {form::GradAGrad{Aq}, form::UDivAGrad{divq}});
  const Eigen::VectorXd F = assemble_vector(*space_, {form::LoadGrad{[&A](const QPoint& q) { return Vec2(-A.div(q.x)); }}});
  b_ = basis_integrals(*space_);
  const int n = space_->n_dofs();
  try {
    const auto cs = apply_constraints(space_, K, F);
    SolveStats st;
    const Eigen::VectorXd x = solve(cs.system, opt_, &st);
    max_residual_ = st.relative_residual;
    m_ = FeFunction(space_, (x.head(n).array() + 1.0).matrix());
    K_ = K;
  } catch (const SolverFailure& e) {
    throw HTooCoarse("cell problem singular on this mesh (h = " + std::to_string(space_->mesh().h_max()) + ")", e);
  }
}

FeFunction CellOperator::solve_shifted(const Eigen::VectorXd& F) const {
  const Eigen::VectorXd& m = m_.coeffs();
  const double c = m.dot(F) / m.dot(b_);
  SolveStats st;
  Eigen::VectorXd x;
  try {
    if (!adjoint_) {
      // The corrector operator is the transpose of the invariant measure operator.
      const auto ct = apply_constraints(space_, SpMat(K_.transpose()), Eigen::VectorXd::Zero(F.size()));
      adjoint_ = std::make_unique<Factorization>(ct.system.matrix, false, opt_);
      K_ = SpMat();
    }
    x = adjoint_->solve(bordered_rhs(F - c * b_), &st);
  } catch (const SolverFailure& e) {
    throw HTooCoarse("corrector system singular", e);
  }
  max_residual_ = std::max(max_residual_, st.relative_residual);
  return FeFunction(space_, x.head(F.size()));
}

FeFunction solve_invariant_measure(CellCoefficientPtr a, FeSpacePtr space, const SolveOptions& opt) {
  return CellOperator(std::move(a), std::move(space), opt).invariant_measure();
}

HomogenizedMatrix homogenized_matrix(const CellCoefficient& a, const FeFunction& m_h) {
  const auto& s = m_h.space();
  const auto& mesh = s.mesh();
  Mat2 a0 = Mat2::Zero();
  int d[12];
  for (int t = 0; t < static_cast<int>(mesh.n_triangles()); ++t) {
    s.local_dofs(t, d);
    const auto c = mesh.corners(t);
    Mat2 sum = Mat2::Zero();
    for (int k = 0; k < 3; ++k) sum += a.eval(c[k]) * m_h.coeffs()[d[k]];
    a0 += mesh.area(t) / 3.0 * sum;
  }
  HomogenizedMatrix out;
  out.entries = 0.5 * (a0 + a0.transpose());
  out.h = mesh.h_max();
  return out;
}

FeFunction solve_corrector(const CellOperator& op, const HomogenizedMatrix& a0, int i, int j) {
  const CellCoefficient& A = op.coefficient();
  const double a0ij = a0(i, j);
  // -int g phi with g = a0_ij - a_ij.
  const Eigen::VectorXd F =
      assemble_vector(*op.space(), {form::Load{[&A, a0ij, i, j](const QPoint& q) { return A.eval(q.x)(i, j) - a0ij; }}});
  return op.solve_shifted(F);
}

FeFunction derivative_lift(const CellOperator& op, const FeFunction& chi_h, int i, int j, int r) {
  const CellCoefficient& A = op.coefficient();
  require_second_derivatives(A);
  std::vector<LinearTerm> terms;
  // -d_r g = d_r a_ij.
  terms.push_back(form::Load{[&A, i, j, r](const QPoint& q) { return A.grad(q.x, r)(i, j); }});
  // + d_r A : D2 chi, weakly.
  add_weak_contract(terms, A, chi_h, r, 1.0);
  return op.solve_shifted(assemble_vector(*op.space(), terms));
}

FeFunction second_derivative_lift(const CellOperator& op, const std::array<FeFunction, 2>& v, int i, int j, int r,
                                  int s) {
  const CellCoefficient& A = op.coefficient();
  require_second_derivatives(A);
  // D2 chi approximated by the symmetrized gradient of (v_1, v_2).
  auto dv = [&v](const QPoint& q) {
    Mat2 G;
    G.col(0) = grad_at(v[0], q);
    G.col(1) = grad_at(v[1], q);
    return Mat2(0.5 * (G + G.transpose()));
  };
  std::vector<LinearTerm> terms;
  // -d2_rs g + d2_rs A : D2 chi, regular parts.
  terms.push_back(form::Load{[&A, dv, i, j, r, s](const QPoint& q) {
    const Mat2 H = A.hess(q.x, r, s);
    return H(i, j) + contract(H, dv(q));
  }});
  // Their line parts where d_r A = d_s A jumps.
  if (r == s)
    for (const auto& k : kink_terms(A)) {
      if (k.axis != r) continue;
      const Mat2 J = k.jump;
      terms.push_back(form::LineLoad{k.axis, k.position, 1.0,
                                     [J, dv, i, j](const QPoint& q) { return J(i, j) + contract(J, dv(q)); }});
    }
  // + d_s A : D2 xi_r + d_r A : D2 xi_s, weakly.
  add_weak_contract(terms, A, v[r], s, 1.0);
  add_weak_contract(terms, A, v[s], r, 1.0);
  return op.solve_shifted(assemble_vector(*op.space(), terms));
}

CellSolution solve_cell(CellCoefficientPtr a, const TriMesh& mesh, const CellSolveOptions& opt) {
  CellSolution out;
  out.coefficient = a;
  out.space = cell_space(mesh);
  out.h = mesh.h_max();
  const CellOperator op(a, out.space, opt.solve);
  out.m_h = op.invariant_measure();
  const double mmin = out.m_h.coeffs().minCoeff();
  if (mmin <= 0.0) {
    std::ostringstream w;
    w << "invariant measure not positive on the mesh (min " << mmin << " at h = " << out.h
      << "); refine the cell mesh";
    out.warnings.push_back(w.str());
  }
  out.A0_h = homogenized_matrix(*a, out.m_h);

  if (opt.correctors || opt.hessians) {
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j) out.correctors[sym_index(i, j)] = solve_corrector(op, out.A0_h, i, j);
  }
  if (opt.hessians) {
    require_second_derivatives(*a);
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j) {
        const int ij = sym_index(i, j);
        auto& v = out.gradient_lifts[ij];
        for (int r = 0; r < 2; ++r) v[r] = derivative_lift(op, out.correctors[ij], i, j, r);
        auto& z = out.hessian_lifts[ij];
        z[0] = second_derivative_lift(op, v, i, j, 0, 0);
        z[2] = second_derivative_lift(op, v, i, j, 1, 1);
        const FeFunction z12 = second_derivative_lift(op, v, i, j, 0, 1);
        const FeFunction z21 = second_derivative_lift(op, v, i, j, 1, 0);
        z[1] = FeFunction(out.space, 0.5 * (z12.coeffs() + z21.coeffs()));
      }
  }
  out.max_residual = op.max_residual();
  return out;
}

DivergenceFormReport divergence_form_transform(const CellCoefficient& a, const FeFunction& m_h,
                                               const SolveOptions& opt) {
  const FeSpacePtr space = m_h.space_ptr();
  const auto& mesh = space->mesh();
  const QMatrix I = [](const QPoint&) { return Mat2(Mat2::Identity()); };
  const SpMat K = assemble_matrix(*space, *space, {form::GradAGrad{I}});
  const int n = space->n_dofs();
  auto Am = [&a, &m_h](const QPoint& q) { return Mat2(m_h.eval_in_element(q.element, q.x, 0).value * a.eval(q.x)); };

  // -Laplace v_l = (div(A m))_l, weakly -int (A m)_{l.} . grad phi.
  std::array<FeFunction, 2> v;
  {
    const auto cs = apply_constraints(space, K, Eigen::VectorXd::Zero(n), nullptr, true);
    const Factorization f(cs.system.matrix, true, opt);
    for (int l = 0; l < 2; ++l) {
      const Eigen::VectorXd F =
          assemble_vector(*space, {form::LoadGrad{[&Am, l](const QPoint& q) { return Vec2(-Am(q).row(l).transpose()); }}});
      v[l] = FeFunction(space, f.solve(bordered_rhs(F)).head(n));
    }
  }

  DivergenceFormReport rep;
  const int nt = static_cast<int>(mesh.n_triangles());
  rep.b12.resize(nt);
  std::vector<Mat2> B(nt);
  double mean = 0.0;
  for (int t = 0; t < nt; ++t) {
    const auto c = mesh.corners(t);
    const Vec2 x = (c[0] + c[1] + c[2]) / 3.0;
    Mat2 G;
    for (int l = 0; l < 2; ++l) G.col(l) = v[l].eval_in_element(t, x, 1).grad;
    // B_ij = d_i v_j - d_j v_i.
    B[t] = G - G.transpose();
    rep.b12[t] = B[t](0, 1);
    rep.skewness = std::max(rep.skewness, (B[t] + B[t].transpose()).cwiseAbs().maxCoeff());
    mean += mesh.area(t) * B[t](0, 1);
  }
  rep.mean = std::abs(mean);

  const QScalar one = [](const QPoint&) { return 1.0; };
  const SpMat M = assemble_matrix(*space, *space, {form::Mass{one}});
  double worst = 0.0;
  // Divergence acts on columns: sum_i d_i (A m + B)_ij = 0 for each j.
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd r = assemble_vector(
        *space, {form::LoadGrad{[&Am, &B, j](const QPoint& q) { return Vec2((Am(q) + B[q.element]).col(j)); }}});
    for (int d = 0; d < n; ++d) worst = std::max(worst, std::abs(r[d]) / std::sqrt(M.coeff(d, d) + K.coeff(d, d)));
  }
  rep.weak_divergence_residual = worst;
  return rep;
}

void write_cell_solution(std::ostream& os, const CellSolution& cell, const std::vector<std::string>& files) {
  os << "cell-solution v1\n";
  os << "coefficient " << (cell.coefficient ? cell.coefficient->info().name : "?") << "\n";
  os << std::setprecision(17);
  os << "h " << cell.h << "\n";
  os << "mesh_hash " << (cell.space ? cell.space->mesh().hash() : 0) << "\n";
  os << "a0 " << cell.A0_h(0, 0) << " " << cell.A0_h(0, 1) << " " << cell.A0_h(1, 1) << "\n";
  os << "max_residual " << cell.max_residual << "\n";
  for (const auto& f : files) os << "file " << f << "\n";
  for (const auto& w : cell.warnings) os << "warning " << w << "\n";
}

}  // namespace homog
