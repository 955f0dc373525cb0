#include "homog/assembly.hpp"
#include "homog/linear_solve.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace homog;

namespace {

std::shared_ptr<const TriMesh> square(int n, DiagonalPattern p = DiagonalPattern::Diagonal) {
  return std::make_shared<const TriMesh>(unit_square_mesh(n, p));
}

const QScalar kOne = [](const QPoint&) { return 1.0; };

SparseSystem dense_system(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, bool sym) {
  SparseSystem s;
  s.matrix = A.sparseView();
  s.rhs = b;
  s.symmetric = sym;
  return s;
}

}  // namespace

TEST(Assemble, MassSumsToArea) {
  const auto s = FeSpace::create(SpaceKind::P1, square(1));
  const SpMat M = assemble_matrix(*s, *s, {form::Mass{}});
  EXPECT_NEAR(Eigen::MatrixXd(M).sum(), 1.0, 1e-15);
}

TEST(Assemble, MassSumsToAreaAllSpaces) {
  const auto m = square(3, DiagonalPattern::CrissCross);
  for (auto kind : {SpaceKind::P1, SpaceKind::P2}) {
    const auto s = FeSpace::create(kind, m);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(s->n_dofs());
    EXPECT_NEAR(one.dot(assemble_matrix(*s, *s, {form::Mass{}}) * one), 1.0, 1e-14);
  }
}

TEST(Assemble, LoadOfOneSumsToOne) {
  const auto s = FeSpace::create(SpaceKind::P1, square(5));
  EXPECT_NEAR(assemble_vector(*s, {form::Load{kOne}}).sum(), 1.0, 1e-14);
}

TEST(Assemble, PeriodicStiffnessRowSumsVanish) {
  const auto m = std::make_shared<const TriMesh>(cell_mesh(6));
  const auto s = FeSpace::create(SpaceKind::P1PerZeroMean, m);
  const SpMat K = assemble_matrix(*s, *s, {form::GradAGrad{[](const QPoint&) { return Mat2(Mat2::Identity()); }}});
  const Eigen::VectorXd rs = K * Eigen::VectorXd::Ones(s->n_dofs());
  EXPECT_LE(rs.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Assemble, SymmetricCoefficientGivesSymmetricMatrix) {
  const auto m = square(6, DiagonalPattern::CrissCross);
  const QMatrix A = [](const QPoint& q) {
    Mat2 a;
    a << 2 + std::sin(q.x.x()), 0.3 * q.x.y(), 0.3 * q.x.y(), 1 + q.x.x() * q.x.x();
    return a;
  };
  for (auto kind : {SpaceKind::P1, SpaceKind::P2, SpaceKind::HCT}) {
    const auto s = FeSpace::create(kind, m);
    const SpMat K = assemble_matrix(*s, *s, {form::GradAGrad{A}});
    const SpMat Kt = K.transpose();
    EXPECT_LE(Eigen::MatrixXd(K - Kt).cwiseAbs().maxCoeff(), 1e-12) << to_string(kind);
  }
}

TEST(Assemble, UDivAGradIsTransposeOfDivAGradU) {
  const auto m = square(4);
  const auto s = FeSpace::create(SpaceKind::P2, m);
  const QVector b = [](const QPoint& q) { return Vec2(std::cos(q.x.y()), q.x.x()); };
  const SpMat K1 = assemble_matrix(*s, *s, {form::UDivAGrad{b}});
  const SpMat K2 = assemble_matrix(*s, *s, {form::DivAGradU{b}});
  EXPECT_LE(Eigen::MatrixXd(K1 - SpMat(K2.transpose())).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Assemble, HessianFormNeedsHct) {
  const auto s = FeSpace::create(SpaceKind::P1, square(2));
  const QMatrix I = [](const QPoint&) { return Mat2(Mat2::Identity()); };
  EXPECT_THROW(assemble_matrix(*s, *s, {form::HessContractPair{I, I, {}}}), CapabilityError);
}

TEST(Assemble, MixedMeshesRejected) {
  const auto a = FeSpace::create(SpaceKind::P1, square(2));
  const auto b = FeSpace::create(SpaceKind::P1, square(3));
  EXPECT_THROW(assemble_matrix(*a, *b, {form::Mass{}}), MeshMismatch);
}

TEST(Assemble, LineLoadIntegratesAlongLine) {
  for (auto pattern : {DiagonalPattern::Diagonal, DiagonalPattern::CrissCross})
    for (int n : {4, 5}) {
      const auto s = FeSpace::create(SpaceKind::P1, square(n, pattern));
      const form::LineLoad line{0, 0.5, 1.0, [](const QPoint& q) { return q.x.y(); }};
      // int_0^1 y dy over x1 = 1/2, summed over the partition of unity.
      EXPECT_NEAR(assemble_vector(*s, {line}).sum(), 0.5, 1e-14) << n;
    }
}

TEST(Assemble, LaplaceP2ExactForQuadratic) {
  const auto m = square(4, DiagonalPattern::CrissCross);
  const auto s = FeSpace::create(SpaceKind::P2, m, Constraint::DirichletZero);
  const QMatrix I = [](const QPoint&) { return Mat2(Mat2::Identity()); };
  const SpMat K = assemble_matrix(*s, *s, {form::GradAGrad{I}});
  // u = x(1-x) solves -u'' = 2 but is not zero on x2 = 0,1; use u = x(1-x)y(1-y).
  const QScalar f = [](const QPoint& q) {
    const double x = q.x.x(), y = q.x.y();
    return 2 * (x * (1 - x) + y * (1 - y));
  };
  const Eigen::VectorXd F = assemble_vector(*s, {form::Load{f}});
  const auto cs = apply_constraints(s, K, F, nullptr, true);
  const FeFunction u(s, recover(cs, solve(cs.system)));
  const double exact = 0.3 * 0.7 * 0.6 * 0.4;
  EXPECT_NEAR(u.value(Vec2(0.3, 0.6)), exact, 2e-3);
  EXPECT_NEAR(u.value(Vec2(0.5, 0.5)), 1.0 / 16, 2e-3);
}

TEST(Solve, Identity) {
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, 1, 5);
  for (auto m : {SolveMethod::Direct, SolveMethod::Cholesky, SolveMethod::CG, SolveMethod::BiCGStab,
                 SolveMethod::GMRES}) {
    const auto x = solve(dense_system(Eigen::MatrixXd::Identity(5, 5), b, true), {m});
    EXPECT_LE((x - b).cwiseAbs().maxCoeff(), 1e-12) << to_string(m);
  }
}

TEST(Solve, Tridiagonal) {
  Eigen::Matrix3d A;
  A << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  const auto x = solve(dense_system(A, Eigen::Vector3d::Ones(), true));
  EXPECT_NEAR(x[0], 1.5, 1e-14);
  EXPECT_NEAR(x[1], 2.0, 1e-14);
  EXPECT_NEAR(x[2], 1.5, 1e-14);
}

TEST(Solve, RandomSpdDirectAgreesWithCg) {
  std::mt19937 rng(42);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd B(50, 50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) B(i, j) = nd(rng);
  const Eigen::MatrixXd A = B * B.transpose() + 50 * Eigen::MatrixXd::Identity(50, 50);
  Eigen::VectorXd b(50);
  for (int i = 0; i < 50; ++i) b[i] = nd(rng);
  const auto sys = dense_system(A, b, true);
  const auto xd = solve(sys, {SolveMethod::Direct});
  const auto xc = solve(sys, {SolveMethod::CG, 1e-12});
  const auto xg = solve(sys, {SolveMethod::GMRES, 1e-12});
  EXPECT_LE((xd - xc).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((xd - xg).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Solve, SingularThrows) {
  Eigen::Matrix2d A;
  A << 1, 1, 1, 1;
  EXPECT_THROW(solve(dense_system(A, Eigen::Vector2d(1, 0), false)), SolverFailure);
}

TEST(Solve, CgRequiresSymmetricFlag) {
  EXPECT_THROW(solve(dense_system(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d::Ones(), false),
                     {SolveMethod::CG}),
               InvalidArgument);
}

TEST(Constraints, ZeroMeanSolve) {
  const auto m = std::make_shared<const TriMesh>(cell_mesh(8));
  const auto s = FeSpace::create(SpaceKind::P1PerZeroMean, m);
  const QMatrix I = [](const QPoint&) { return Mat2(Mat2::Identity()); };
  const SpMat K = assemble_matrix(*s, *s, {form::GradAGrad{I}});
  const QScalar f = [](const QPoint& q) { return std::sin(2 * kPi * q.x.x()) + 0.7; };
  const Eigen::VectorXd F = assemble_vector(*s, {form::Load{f}});
  const auto cs = apply_constraints(s, K, F, nullptr, true);
  const FeFunction u(s, recover(cs, solve(cs.system)));
  EXPECT_LE(std::abs(u.integral()), 1e-10);
}
