#include "homog/macro_solver.hpp"

#include "homog/parallel.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

namespace homog {

std::string to_string(BoundaryGradient b) { return b == BoundaryGradient::P2Aux ? "p2_aux" : "natural"; }

BoundaryGradient boundary_gradient_from_string(const std::string& s) {
  if (s == "p2_aux") return BoundaryGradient::P2Aux;
  if (s == "natural") return BoundaryGradient::Natural;
  throw InvalidArgument("unknown boundary gradient treatment '" + s + "' (expected p2_aux or natural)");
}

std::string to_json_line(const RunRecord& r) {
  nlohmann::json j;
  j["formulation"] = r.formulation;
  j["n_dofs"] = r.n_dofs;
  j["n_free"] = r.n_free;
  j["h_max"] = r.h_max;
  j["grid_spacing"] = r.grid_spacing;
  if (r.epsilon > 0.0) j["epsilon"] = r.epsilon;
  j["residual"] = r.residual;
  j["seconds"] = r.seconds;
  return j.dump();
}

namespace {

using Clock = std::chrono::steady_clock;

QScalar at_points(const ScalarFunction& f) {
  return [&f](const QPoint& q) { return f(q.x); };
}

void require_spd(const Mat2& a, const char* what) {
  const HomogenizedMatrix h{a};
  if (!h.elliptic()) throw EllipticityViolation(std::string(what) + ": matrix is not symmetric positive definite");
}

FeFunction solve_and_record(const std::string& formulation, FeSpacePtr space, const SpMat& K, const Eigen::VectorXd& F,
                            const Eigen::VectorXd* fixed, bool symmetric, double eps, const MacroOptions& opt,
                            Clock::time_point t0) {
  const auto cs = apply_constraints(space, K, F, fixed, symmetric);
  SolveStats st;
  const Eigen::VectorXd x = solve(cs.system, opt.solve, &st);
  FeFunction u(space, recover(cs, x));
  RunRecord r;
  r.formulation = formulation;
  r.n_dofs = space->n_dofs();
  r.n_free = space->n_free();
  r.h_max = space->mesh().h_max();
  r.grid_spacing = space->mesh().grid_spacing();
  r.epsilon = eps;
  r.residual = st.relative_residual;
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (opt.manifest) *opt.manifest << to_json_line(r) << "\n";
  if (opt.record) *opt.record = r;
  return u;
}

// Boundary values for the HCT dofs: zero traces, normal derivatives from g.
Eigen::VectorXd boundary_gradient_values(const FeSpace& s, const FeFunction& g) {
  const TriMesh& m = s.mesh();
  const int nv = static_cast<int>(m.n_vertices());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(s.n_dofs());
  int hint = -1;
  for (int i = 0; i < nv; ++i) {
    const unsigned mask = m.vertex_boundary_mask(i);
    if (mask == 0) continue;
    const bool xside = mask & ((1u << (kLeft - 1)) | (1u << (kRight - 1)));
    const bool yside = mask & ((1u << (kBottom - 1)) | (1u << (kTop - 1)));
    // Corners: both tangential derivatives vanish.
    if (xside && yside) continue;
    const Vec2 grad = g.jet(m.vertices()[i], 1, &hint).grad;
    if (xside) v[3 * i + 1] = grad.x();
    else v[3 * i + 2] = grad.y();
  }
  for (int e = 0; e < static_cast<int>(m.n_edges()); ++e) {
    if (m.edge_tag(e) == 0) continue;
    const auto& ed = m.edges()[e];
    const Vec2 mid = 0.5 * (m.vertices()[ed[0]] + m.vertices()[ed[1]]);
    v[3 * nv + e] = g.jet(mid, 1, &hint).grad.dot(s.edge_normal(e));
  }
  return v;
}

}  // namespace

FeFunction solve_homogenized_h1(const HomogenizedMatrix& a0, const ScalarFunction& f, MeshPtr mesh,
                                const MacroOptions& opt) {
  require_spd(a0.entries, "solve_homogenized_h1");
  const auto t0 = Clock::now();
  const auto space = FeSpace::create(SpaceKind::P2, std::move(mesh), Constraint::DirichletZero);
  const Mat2 A = a0.entries;
  // A0 : D2 u = div(A0 grad u) for constant A0, so int A0 grad u . grad v = -int f v.
  const SpMat K = assemble_matrix(*space, *space, {form::GradAGrad{[A](const QPoint&) { return A; }}});
  const Eigen::VectorXd F = assemble_vector(*space, {form::Load{[&f](const QPoint& q) { return -f(q.x); }}});
  return solve_and_record("H1_P2", space, K, F, nullptr, true, 0.0, opt, t0);
}

FeFunction solve_homogenized_h2(const HomogenizedMatrix& a0, const ScalarFunction& f, MeshPtr mesh,
                                const MacroOptions& opt) {
  require_spd(a0.entries, "solve_homogenized_h2");
  const auto t0 = Clock::now();
  const bool aux = opt.boundary_gradient == BoundaryGradient::P2Aux;
  const auto space = FeSpace::create(SpaceKind::HCT, mesh,
                                     aux ? Constraint::DirichletZeroWithBoundaryGradient : Constraint::DirichletZero);
  const Mat2 A = a0.entries;
  const QMatrix Aq = [A](const QPoint&) { return A; };
  const SpMat K = assemble_matrix(*space, *space, {form::HessContractPair{Aq, Aq, {}}});
  const Eigen::VectorXd F = assemble_vector(*space, {form::LoadAgainstContract{at_points(f), Aq, {}}});
  Eigen::VectorXd fixed;
  if (aux) {
    TriMesh fine = *mesh;
    for (int r = 0; r < opt.aux_refinements; ++r) fine = refine(fine);
    MacroOptions quiet = opt;
    quiet.manifest = nullptr;
    quiet.record = nullptr;
    const FeFunction g = solve_homogenized_h1(a0, f, std::make_shared<const TriMesh>(std::move(fine)), quiet);
    fixed = boundary_gradient_values(*space, g);
  }
  return solve_and_record("H2_HCT_LS", space, K, F, aux ? &fixed : nullptr, true, 0.0, opt, t0);
}

namespace {

FeFunction fine_scale(const std::function<Mat2(const Vec2&, const Vec2&)>& A, double delta, double eps,
                      const ScalarFunction& f, MeshPtr mesh, const MacroOptions& opt) {
  if (!(eps > 0.0)) throw InvalidArgument("solve_fine_scale: epsilon must be positive");
  const double need = eps / opt.fine_ratio;
  if (mesh->grid_spacing() > need * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "fine-scale mesh spacing " << mesh->grid_spacing() << " does not resolve eps = " << eps << " (need <= "
       << need << ")";
    throw MeshTooCoarse(os.str());
  }
  if (!(delta > 0.0)) throw EllipticityViolation("solve_fine_scale: Cordes condition fails");
  const auto t0 = Clock::now();
  const auto space = FeSpace::create(SpaceKind::HCT, std::move(mesh), Constraint::DirichletZero);
  auto cell_point = [eps](const Vec2& x) {
    const Vec2 y = x / eps;
    return Vec2(y.x() - std::floor(y.x()), y.y() - std::floor(y.y()));
  };
  const QMatrix Aq = [&A, cell_point](const QPoint& q) { return A(q.x, cell_point(q.x)); };
  const QScalar gq = [&A, cell_point](const QPoint& q) { return cordes_gamma(A(q.x, cell_point(q.x))); };
  const SpMat K = assemble_matrix(*space, *space, {form::CordesLS{Aq, gq}});
  const Eigen::VectorXd F = assemble_vector(*space, {form::LoadAgainstLaplacian{at_points(f), gq}});
  return solve_and_record("Cordes_LS_fine", space, K, F, nullptr, false, eps, opt, t0);
}

}  // namespace

FeFunction solve_fine_scale(CellCoefficientPtr a, double eps, const ScalarFunction& f, MeshPtr mesh,
                            const MacroOptions& opt) {
  const double delta = cordes_check(*a).delta;
  return fine_scale([&a](const Vec2&, const Vec2& y) { return a->eval(y); }, delta, eps, f, std::move(mesh), opt);
}

FeFunction solve_fine_scale(MacroCoefficientPtr a, double eps, const ScalarFunction& f, MeshPtr mesh,
                            const MacroOptions& opt) {
  const double delta = cordes_check(*a).delta;
  return fine_scale([&a](const Vec2& x, const Vec2& y) { return a->eval(x, y); }, delta, eps, f, std::move(mesh),
                    opt);
}

FeFunction solve_variable_h2(const std::array<FeFunction, 3>& a0_field, const ScalarFunction& f,
                             const MacroOptions& opt) {
  const auto t0 = Clock::now();
  const auto& mesh = a0_field[0].space().mesh_ptr();
  const auto space = FeSpace::create(SpaceKind::HCT, mesh, Constraint::DirichletZero);
  auto A = [&a0_field](const QPoint& q) {
    const double a11 = a0_field[0].eval_in_element(q.element, q.x, 0).value;
    const double a12 = a0_field[1].eval_in_element(q.element, q.x, 0).value;
    const double a22 = a0_field[2].eval_in_element(q.element, q.x, 0).value;
    return Mat2{{a11, a12}, {a12, a22}};
  };
  const QMatrix Aq = A;
  const QScalar gq = [A](const QPoint& q) { return cordes_gamma(A(q)); };
  const SpMat K = assemble_matrix(*space, *space, {form::CordesLS{Aq, gq}});
  const Eigen::VectorXd F = assemble_vector(*space, {form::LoadAgainstLaplacian{at_points(f), gq}});
  return solve_and_record("Cordes_LS_variable", space, K, F, nullptr, false, 0.0, opt, t0);
}

Mat2 NonuniformResult::a0_at(const Vec2& x) const {
  const double a11 = a0_field[0].value(x), a12 = a0_field[1].value(x), a22 = a0_field[2].value(x);
  return Mat2{{a11, a12}, {a12, a22}};
}

NonuniformResult solve_nonuniform(MacroCoefficientPtr a, const MacroGrid& grid, int cell_n, const ScalarFunction& f,
                                  const MacroOptions& opt) {
  const auto& nodes = grid.nodes();
  const int n = static_cast<int>(nodes.size());
  const TriMesh cell = cell_mesh(cell_n, DiagonalPattern::Diagonal);
  const auto space = cell_space(cell);

  NonuniformResult out;
  out.a0_nodes.assign(n, Mat2::Zero());
  std::vector<std::string> errors(n);
  parallel_chunks(n, [&](int i) {
    try {
      const auto frozen = freeze(a, nodes[i]);
      const FeFunction m = solve_invariant_measure(frozen, space, opt.solve);
      if (m.coeffs().minCoeff() <= 0.0) throw HTooCoarse("invariant measure not positive", 0.0);
      out.a0_nodes[i] = homogenized_matrix(*frozen, m).entries;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (int i = 0; i < n; ++i)
    if (!errors[i].empty()) {
      std::ostringstream os;
      os << "cell problem at macro node " << i << " (" << nodes[i].x() << ", " << nodes[i].y() << ") failed: " << errors[i];
      throw SolverFailure(os.str(), std::numeric_limits<double>::infinity());
    }

  const auto p1 = FeSpace::create(SpaceKind::P1, std::make_shared<const TriMesh>(grid.mesh));
  for (int e = 0; e < 3; ++e) {
    const int r = e == 2 ? 1 : 0, c = e == 0 ? 0 : 1;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = out.a0_nodes[i](r, c);
    out.a0_field[e] = FeFunction(p1, v);
  }
  for (int i = 0; i < n; ++i) require_spd(out.a0_nodes[i], "solve_nonuniform");
  out.u0 = solve_variable_h2(out.a0_field, f, opt);
  return out;
}

}  // namespace homog
