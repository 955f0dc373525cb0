#include "homog/macro_solver.hpp"
#include "homog/reconstruction.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace homog;

namespace {

MeshPtr square(int n) { return std::make_shared<const TriMesh>(unit_square_mesh(n)); }

FeFunction hct_interpolant(int n, const JetFunction& f) {
  return interpolate(FeSpace::create(SpaceKind::HCT, square(n)), f);
}

// u = x1^2 + 3 x1 x2 - x2^2 / 2 has a constant Hessian.
Jet quadratic(const Vec2& x, int) {
  Jet j;
  j.value = x.x() * x.x() + 3 * x.x() * x.y() - 0.5 * x.y() * x.y();
  j.grad = Vec2(2 * x.x() + 3 * x.y(), 3 * x.x() - x.y());
  j.hess = Mat2{{2.0, 3.0}, {3.0, -1.0}};
  return j;
}

std::shared_ptr<const CellSolution> cell(const char* name, int n) {
  return std::make_shared<const CellSolution>(solve_cell(builtin_cell(name), cell_mesh(n)));
}

}  // namespace

TEST(Reconstruction, IdentityCollapsesToU0) {
  const auto u0 = hct_interpolant(4, known_u0("paper41").as_jet_function());
  const auto r = reconstruct(u0, cell("identity", 8), 0.1);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec2 x(u(rng), u(rng));
    EXPECT_LE((r.hessian(x) - u0.hessian(x)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(r.first_order(x), u0.value(x), 1e-12);
  }
}

TEST(Reconstruction, NeedsHctInput) {
  const auto p2 = interpolate(FeSpace::create(SpaceKind::P2, square(4), Constraint::DirichletZero),
                              ScalarFunction([](const Vec2& x) { return x.x() * (1 - x.x()); }));
  EXPECT_THROW(reconstruct(p2, cell("identity", 4), 0.1), CapabilityError);
  const auto a = builtin_cell("paper41");
  const auto bare = std::make_shared<const CellSolution>(solve_cell(a, cell_mesh(4), CellSolveOptions{true, false, {}}));
  EXPECT_THROW(reconstruct(hct_interpolant(2, quadratic), bare, 0.1), CapabilityError);
}

TEST(Reconstruction, SymmetricHessian) {
  const auto r = reconstruct(hct_interpolant(4, known_u0("paper41").as_jet_function()), cell("paper41", 16), 0.07);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Vec2 x(u(rng), u(rng));
    EXPECT_EQ(r.hessian_entry(x, 0, 1), r.hessian_entry(x, 1, 0));
  }
}

TEST(Reconstruction, EpsPeriodicForConstantHessian) {
  const double eps = 0.125;
  const Reconstruction r(quadratic, corrector_source(cell("paper41", 16)), eps, true);
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.7);
  for (int i = 0; i < 100; ++i) {
    const Vec2 x(u(rng), u(rng));
    const Vec2 shift = eps * Vec2(1 + i % 2, 2 - i % 3);
    EXPECT_LE((r.hessian(x) - r.hessian(x + shift)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Reconstruction, FirstOrderTermBoundedAtUnitEps) {
  const auto c = cell("paper41", 16);
  const auto u0 = hct_interpolant(4, known_u0("paper41").as_jet_function());
  const auto r = reconstruct(u0, c, 1.0);
  double chi = 0.0;
  for (const auto& f : c->correctors) chi = std::max(chi, f.coeffs().cwiseAbs().maxCoeff());
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Vec2 x(u(rng), u(rng));
    const Mat2 H = u0.hessian(x);
    EXPECT_LE(std::abs(r.first_order(x) - u0.value(x)), chi * H.cwiseAbs().sum() + 1e-14);
  }
}

TEST(Reconstruction, FeLiftsApproachClosedForm) {
  const auto o = oracle_y1_only(builtin_cell("paper41"));
  const auto u0 = known_u0("paper41").as_jet_function();
  const Reconstruction exact(u0, corrector_source(o), 0.5, false);
  const TriMesh mesh = unit_square_mesh(8);
  std::vector<double> err;
  for (int n : {16, 32}) {
    const Reconstruction fe(u0, corrector_source(cell("paper41", n)), 0.5, true);
    NormOptions no;
    no.mesh = &mesh;
    no.subcell_refinement = 4;
    err.push_back(error_norms(fe.as_jet_function(), exact.as_jet_function(), {Norm::l2_of_entry(0, 0)}, no)[0]);
  }
  EXPECT_GE(std::log2(err[0] / err[1]), 0.9);
}

TEST(ErrorReport, ConstantCoefficientReducesToReferenceError) {
  const Mat2 a{{2.0, 0.5}, {0.5, 3.0}};
  const auto f = rhs_for_known_u0(a);
  const auto ref = solve_fine_scale(builtin_cell("constant_spd(2,3,0.5)"), 0.5, f, square(16));
  const auto exact = known_u0("paper41").as_jet_function();
  const auto c = std::make_shared<const CellSolution>(solve_cell(builtin_cell("constant_spd(2,3,0.5)"), cell_mesh(4)));
  const Reconstruction r(exact, corrector_source(c), 0.5, true);
  const auto rep = corrector_error_report(ref, r);
  NormOptions no;
  no.subcell_refinement = rep.subcells;
  const auto direct = error_norms(ref, exact, {{NormKind::H1}, Norm::l2_of_entry(0, 0), Norm::l2_of_entry(0, 1)}, no);
  EXPECT_NEAR(rep.h1_error, direct[0], 1e-12);
  EXPECT_NEAR(rep.l2[0], direct[1], 1e-10);
  EXPECT_NEAR(rep.l2[1], direct[2], 1e-10);
  EXPECT_LE(rep.squared_total, 1e-3);
  const double sum = rep.h1_error * rep.h1_error + rep.l2[0] * rep.l2[0] + rep.l2[1] * rep.l2[1] + rep.l2[2] * rep.l2[2];
  EXPECT_NEAR(rep.squared_total, sum, 1e-12 * sum);
  for (int k = 0; k < 3; ++k) {
    EXPECT_GE(rep.l2[k], 0.0);
    EXPECT_GE(rep.l1[k], 0.0);
    EXPECT_LE(rep.l1[k], rep.l2[k] + 1e-15);
  }
}

TEST(ErrorReport, RefusesUnderResolvedQuadrature) {
  const auto ref = interpolate(FeSpace::create(SpaceKind::HCT, square(8)), JetFunction(quadratic));
  const Reconstruction r(quadratic, corrector_source(cell("identity", 4)), 1.0 / 16, true);
  ReportOptions opt;
  opt.subcells = 1;
  EXPECT_THROW(corrector_error_report(ref, r, opt), InvalidArgument);
  opt.subcells = 0;
  EXPECT_NO_THROW(corrector_error_report(ref, r, opt));
}

TEST(ErrorReport, ErrorDecreasesWithEps) {
  const auto a = builtin_cell("paper41");
  const auto o = oracle_y1_only(a);
  const auto f = rhs_for_known_u0(o.A0);
  const auto u0 = known_u0("paper41").as_jet_function();
  double prev = std::numeric_limits<double>::infinity();
  for (int k : {2, 4, 8}) {
    const double eps = 1.0 / k;
    const auto ref = solve_fine_scale(a, eps, f, square(8 * k));
    const auto rep = corrector_error_report(ref, Reconstruction(u0, corrector_source(o), eps, false));
    EXPECT_LE(rep.squared_total, 1.1 * prev) << "eps = 1/" << k;
    prev = rep.squared_total;
  }
}

TEST(ErrorReport, CsvRow) {
  ErrorReport r;
  r.epsilon = 0.125;
  r.squared_total = 2.5;
  EXPECT_EQ(ErrorReport::csv_header(true), "epsilon,h_cell,k_macro,h1_err,e11,e12,e22,squared_total,eoc");
  EXPECT_EQ(r.csv_row(), "0.125,0,0,0,0,0,0,2.5");
  const double nan = std::nan("");
  EXPECT_EQ(r.csv_row(&nan), "0.125,0,0,0,0,0,0,2.5,-");
  const double e = 1.0;
  EXPECT_EQ(r.csv_row(&e), "0.125,0,0,0,0,0,0,2.5,1");
}
