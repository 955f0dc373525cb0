#include "homog/cell_solver.hpp"
#include "homog/norms.hpp"
#include "homog/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace homog;

namespace {

double max_abs(const FeFunction& f) { return f.coeffs().cwiseAbs().maxCoeff(); }

// K_ij = int (A grad phi_j + phi_j div A) . grad phi_i on the periodic space.
SpMat measure_operator(const CellCoefficient& a, const FeSpace& s) {
  const QMatrix Aq = [&a](const QPoint& q) { return a.eval(q.x); };
  const QVector dq = [&a](const QPoint& q) { return a.div(q.x); };
  return assemble_matrix(s, s, {form::GradAGrad{Aq}, form::UDivAGrad{dq}});
}

}  // namespace

TEST(CellSolver, TrivialCoefficientsAreExact) {
  for (const char* name : {"identity", "constant_spd(2,3)", "constant_spd(2,3,0.5)"}) {
    const auto a = builtin_cell(name);
    const auto cs = solve_cell(a, cell_mesh(8));
    EXPECT_LE((cs.m_h.coeffs().array() - 1.0).abs().maxCoeff(), 1e-10) << name;
    EXPECT_LE((cs.A0_h.entries - a->eval(Vec2(0.2, 0.4))).cwiseAbs().maxCoeff(), 1e-10) << name;
    for (int ij = 0; ij < 3; ++ij) {
      EXPECT_LE(max_abs(cs.correctors[ij]), 1e-10) << name;
      for (int r = 0; r < 2; ++r) EXPECT_LE(max_abs(cs.gradient_lifts[ij][r]), 1e-10) << name;
      for (int kl = 0; kl < 3; ++kl) EXPECT_LE(max_abs(cs.hessian_lifts[ij][kl]), 1e-10) << name;
    }
    EXPECT_TRUE(cs.warnings.empty());
  }
}

TEST(CellSolver, SepDiagHomogenizedMatrix) {
  const auto cs = solve_cell(builtin_cell("sep_diag(2)"), cell_mesh(64), {true, false});
  EXPECT_NEAR(cs.A0_h(0, 0), std::sqrt(6.0), 1e-3);
  EXPECT_NEAR(cs.A0_h(1, 1), 1.0, 1e-3);
  EXPECT_NEAR(cs.A0_h(0, 1), 0.0, 1e-12);
  EXPECT_TRUE(cs.A0_h.elliptic());
}

TEST(CellSolver, Paper41Constants) {
  const auto cs = solve_cell(builtin_cell("paper41"), cell_mesh(64), {false, false});
  EXPECT_NEAR(cs.A0_h(0, 0), 1.4684, 5e-4);
  EXPECT_NEAR(cs.A0_h(1, 1), 2.6037, 5e-4);
  EXPECT_LE(std::abs(cs.A0_h(0, 1)), 1e-6);
}

TEST(CellSolver, MeasureIsPositiveWithUnitMean) {
  const auto cs = solve_cell(builtin_cell("paper41"), cell_mesh(16), {false, false});
  EXPECT_GT(cs.m_h.coeffs().minCoeff(), 0.0);
  EXPECT_NEAR(cs.m_h.integral(), 1.0, 1e-12);
}

TEST(CellSolver, GalerkinOrthogonality) {
  const auto a = builtin_cell("paper41");
  const auto space = cell_space(cell_mesh(12, DiagonalPattern::Diagonal, 1.0 / 24.0));
  const CellOperator op(a, space);
  const SpMat K = measure_operator(*a, *space);
  // The measure annihilates every test function.
  const Eigen::VectorXd Km = K * op.invariant_measure().coeffs();
  EXPECT_LE(Km.cwiseAbs().maxCoeff(), 1e-12);
  // The corrector satisfies the shifted equation in every row.
  HomogenizedMatrix a0 = homogenized_matrix(*a, op.invariant_measure());
  const FeFunction chi = solve_corrector(op, a0, 0, 0);
  const Eigen::VectorXd F =
      assemble_vector(*space, {form::Load{[&a, &a0](const QPoint& q) { return a->eval(q.x)(0, 0) - a0(0, 0); }}});
  const Eigen::VectorXd b = basis_integrals(*space);
  const Eigen::VectorXd& m = op.invariant_measure().coeffs();
  const double c = m.dot(F) / m.dot(b);
  EXPECT_LE((K.transpose() * chi.coeffs() - (F - c * b)).cwiseAbs().maxCoeff(), 1e-12);
  // Shift is of the size of the discrete incompatibility only.
  EXPECT_LE(std::abs(c), 1e-2);
}

TEST(CellSolver, CorrectorsHaveZeroMean) {
  const auto cs = solve_cell(builtin_cell("paper41"), cell_mesh(8));
  const Eigen::VectorXd b = basis_integrals(*cs.space);
  for (int ij = 0; ij < 3; ++ij) {
    EXPECT_LE(std::abs(b.dot(cs.correctors[ij].coeffs())), 1e-13);
    for (int kl = 0; kl < 3; ++kl) EXPECT_LE(std::abs(b.dot(cs.hessian_lifts[ij][kl].coeffs())), 1e-13);
  }
}

TEST(CellSolver, ScalingKeepsMeasure) {
  const auto a = builtin_cell("paper41");
  const auto b = parse_cell_field("2*(1+arcsin(sin(pi*y1)^2))", "2*sin(pi*y1)*cos(pi*y1)", "2*(2+cos(pi*y1)^2)");
  const auto mesh = cell_mesh(8);
  const auto ca = solve_cell(a, mesh, {true, false});
  const auto cb = solve_cell(b, mesh, {true, false});
  EXPECT_LE((ca.m_h.coeffs() - cb.m_h.coeffs()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((2.0 * ca.A0_h.entries - cb.A0_h.entries).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((ca.correctors[0].coeffs() - cb.correctors[0].coeffs()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(CellSolver, RichardsonErrorDecreases) {
  const auto a = builtin_cell("paper41");
  const auto o = oracle_y1_only(a);
  double prev = 1.0;
  for (int n : {8, 16, 32}) {
    const auto cs = solve_cell(a, cell_mesh(n), {false, false});
    const double e = (cs.A0_h.entries - o.A0).cwiseAbs().maxCoeff();
    EXPECT_LT(e, prev / 3.0);
    prev = e;
  }
}

TEST(CellSolver, LiftsMatchClosedFormHessian) {
  const auto a = builtin_cell("paper41");
  const auto o = oracle_y1_only(a);
  const auto cs = solve_cell(a, cell_mesh(32));
  const JetFunction z = [&o](const Vec2& y, int) {
    Jet j;
    j.value = o.corrector_hessian(0, 0, 0, 0, y);
    return j;
  };
  EXPECT_LE(error_norm(cs.corrector_hessian(0, 0, 0, 0), z, {NormKind::L2}), 5e-3);
  EXPECT_LE(max_abs(cs.corrector_hessian(0, 0, 1, 1)), 1e-8);
  EXPECT_LE(max_abs(cs.corrector_hessian(0, 0, 0, 1)), 1e-8);
}

TEST(CellSolver, LiftNeedsSecondDerivatives) {
  const auto a = parse_cell_field("2+sin(2*pi*y1)", "0", "1");
  EXPECT_THROW(solve_cell(a, cell_mesh(4)), CapabilityError);
  EXPECT_NO_THROW(solve_cell(a, cell_mesh(4), {true, false}));
}

TEST(DivergenceForm, SkewZeroMeanAndConvergentResidual) {
  const auto a = builtin_cell("paper41");
  double prev = 0.0;
  for (int n : {8, 16, 32}) {
    const auto cs = solve_cell(a, cell_mesh(n), {false, false});
    const auto r = divergence_form_transform(*a, cs.m_h);
    EXPECT_LE(r.skewness, 1e-10);
    // Gradients of periodic P1 functions integrate to zero exactly.
    EXPECT_LE(r.mean, 1e-12);
    if (prev > 0.0) EXPECT_LT(r.weak_divergence_residual, prev / 3.0);
    prev = r.weak_divergence_residual;
  }
}

TEST(CellSolutionExport, ContainsFullPrecisionMatrix) {
  const auto cs = solve_cell(builtin_cell("identity"), cell_mesh(4), {false, false});
  std::ostringstream os;
  write_cell_solution(os, cs, {"m.fefn"});
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("cell-solution v1", 0), 0u);
  EXPECT_NE(s.find("m.fefn"), std::string::npos);
  std::istringstream is(s.substr(s.find("\na0 ") + 4));
  double a11 = 0, a12 = 1, a22 = 0;
  is >> a11 >> a12 >> a22;
  EXPECT_EQ(a11, 1.0);
  EXPECT_EQ(a12, 0.0);
  EXPECT_EQ(a22, 1.0);
}
