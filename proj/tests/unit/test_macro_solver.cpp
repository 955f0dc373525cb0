#include "homog/macro_solver.hpp"
#include "homog/norms.hpp"
#include "homog/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace homog;

namespace {

HomogenizedMatrix matrix(const Mat2& m) {
  HomogenizedMatrix a;
  a.entries = m;
  return a;
}

MeshPtr square(int n) { return std::make_shared<const TriMesh>(unit_square_mesh(n)); }

const ScalarFunction one = [](const Vec2&) { return 1.0; };
const ScalarFunction bump = [](const Vec2& x) { return std::sin(kPi * x.x()) * (1.0 + x.y() * x.y()); };

}  // namespace

TEST(MacroSolver, H2IsLinearInTheLoad) {
  const auto a0 = matrix(Mat2{{1.5, 0.2}, {0.2, 2.5}});
  const auto mesh = square(6);
  MacroOptions opt;
  opt.boundary_gradient = BoundaryGradient::Natural;
  const auto u1 = solve_homogenized_h2(a0, one, mesh, opt);
  const auto u2 = solve_homogenized_h2(a0, bump, mesh, opt);
  const auto u3 = solve_homogenized_h2(a0, [](const Vec2& x) { return 1.0 + 2.0 * bump(x); }, mesh, opt);
  EXPECT_LE((u3.coeffs() - u1.coeffs() - 2.0 * u2.coeffs()).cwiseAbs().maxCoeff(),
            1e-8 * u3.coeffs().cwiseAbs().maxCoeff());
}

TEST(MacroSolver, ZeroLoadGivesZero) {
  const auto zero = [](const Vec2&) { return 0.0; };
  const auto a0 = matrix(Mat2::Identity());
  EXPECT_EQ(solve_homogenized_h2(a0, zero, square(4)).coeffs().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(solve_homogenized_h1(a0, zero, square(4)).coeffs().cwiseAbs().maxCoeff(), 0.0);
}

TEST(MacroSolver, DoublingA0HalvesTheSolution) {
  const auto mesh = square(6);
  const auto u1 = solve_homogenized_h2(matrix(Mat2::Identity()), bump, mesh);
  const auto u2 = solve_homogenized_h2(matrix(2.0 * Mat2::Identity()), bump, mesh);
  EXPECT_LE((u1.coeffs() - 2.0 * u2.coeffs()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MacroSolver, TorsionCenterValue) {
  // Laplace u = 1 with zero boundary values: u(1/2, 1/2) = -0.0736713...
  const auto u = solve_homogenized_h1(matrix(Mat2::Identity()), one, square(32));
  EXPECT_NEAR(u.value(Vec2(0.5, 0.5)), -0.07367135, 1e-5);
  const auto v = solve_homogenized_h2(matrix(Mat2::Identity()), one, square(16));
  EXPECT_NEAR(v.value(Vec2(0.5, 0.5)), -0.07367135, 1e-4);
}

TEST(MacroSolver, DirichletTraceVanishes) {
  const auto a0 = matrix(Mat2{{1.4, 0.1}, {0.1, 2.6}});
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto bg : {BoundaryGradient::P2Aux, BoundaryGradient::Natural}) {
    MacroOptions opt;
    opt.boundary_gradient = bg;
    const auto sol = solve_homogenized_h2(a0, bump, square(8), opt);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double s = u(rng);
      const Vec2 p = i % 4 == 0 ? Vec2(s, 0.0) : i % 4 == 1 ? Vec2(1.0, s) : i % 4 == 2 ? Vec2(s, 1.0) : Vec2(0.0, s);
      worst = std::max(worst, std::abs(sol.value(p)));
    }
    EXPECT_LE(worst, 1e-10) << to_string(bg);
  }
}

TEST(MacroSolver, H2ConvergesToKnownSolution) {
  const auto o = oracle_y1_only(builtin_cell("paper41"));
  const auto f = rhs_for_known_u0(o.A0);
  const auto exact = known_u0("paper41").as_jet_function();
  NormOptions no;
  std::vector<double> err;
  for (int n : {8, 16}) {
    const auto u = solve_homogenized_h2(matrix(o.A0), f, square(n));
    err.push_back(error_norms(u, exact, {{NormKind::H2}}, no)[0]);
  }
  const double eoc = std::log2(err[0] / err[1]);
  EXPECT_GE(eoc, 1.75);
  EXPECT_LE(eoc, 2.25);
}

TEST(MacroSolver, H1P2ConvergesToKnownSolution) {
  const Mat2 a0{{1.5, 0.0}, {0.0, 2.5}};
  const auto f = rhs_for_known_u0(a0);
  const auto exact = known_u0("paper41").as_jet_function();
  std::vector<double> err;
  for (int n : {8, 16}) {
    const auto u = solve_homogenized_h1(matrix(a0), f, square(n));
    err.push_back(error_norms(u, exact, {{NormKind::H1}}, {})[0]);
  }
  EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.25);
}

TEST(MacroSolver, ManifestLine) {
  std::ostringstream os;
  RunRecord rec;
  MacroOptions opt;
  opt.manifest = &os;
  opt.record = &rec;
  solve_homogenized_h2(matrix(Mat2::Identity()), one, square(4), opt);
  EXPECT_EQ(rec.formulation, "H2_HCT_LS");
  EXPECT_GT(rec.n_dofs, 0);
  EXPECT_LE(rec.residual, 1e-8);
  EXPECT_NE(os.str().find("\"formulation\""), std::string::npos);
  EXPECT_EQ(os.str().back(), '\n');
}

TEST(FineScale, ConstantCoefficientConvergesToKnownSolution) {
  const auto a = builtin_cell("constant_spd(2,3,0.5)");
  const auto f = rhs_for_known_u0(a->eval(Vec2::Zero()));
  const auto exact = known_u0("paper41").as_jet_function();
  std::vector<double> err;
  for (int n : {8, 16}) {
    const auto u = solve_fine_scale(a, 1.0, f, square(n));
    err.push_back(error_norms(u, exact, {{NormKind::H2}}, {})[0]);
  }
  EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.25);
}

TEST(FineScale, RefusesUnderResolvedMesh) {
  EXPECT_THROW(solve_fine_scale(builtin_cell("paper41"), 1.0 / 8, one, square(16)), MeshTooCoarse);
}

TEST(Nonuniform, XIndependentCoefficientMatchesSingleCell) {
  const auto a = parse_macro_field("2+sin(pi*y1)^2", "0", "1");
  const auto res = solve_nonuniform(a, MacroGrid(unit_square_mesh(2)), 16, one);
  const auto cell = solve_cell(freeze(a, Vec2::Zero()), cell_mesh(16, DiagonalPattern::Diagonal),
                               CellSolveOptions{false, false, {}});
  ASSERT_EQ(res.a0_nodes.size(), 9u);
  for (const auto& m : res.a0_nodes) EXPECT_LE((m - cell.A0_h.entries).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(res.a0_at(Vec2(0.3, 0.8))(0, 0), cell.A0_h(0, 0), 1e-12);
}

TEST(Nonuniform, Paper43HomogenizedEntryAtOrigin) {
  const auto res = solve_nonuniform(builtin_macro("paper43"), MacroGrid(unit_square_mesh(2)), 16, one);
  // x2 = 0 makes a22 constant 2.
  EXPECT_NEAR(res.a0_nodes[0](1, 1), 2.0, 1e-10);
  const auto o = oracle_diag_product(builtin_macro("paper43"));
  for (std::size_t i = 0; i < res.a0_nodes.size(); ++i) {
    const Vec2 x = unit_square_mesh(2).vertices()[i];
    EXPECT_LE((res.a0_nodes[i] - o.A0(x)).cwiseAbs().maxCoeff(), 5e-3);
  }
}
