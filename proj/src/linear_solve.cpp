#include "homog/linear_solve.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#ifdef HOMOG_HAVE_SUITESPARSE
#include <Eigen/CholmodSupport>
#include <Eigen/UmfPackSupport>
#endif

#include <chrono>
#include <cmath>
#include <limits>

namespace homog {

std::string to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::Direct: return "direct";
    case SolveMethod::Cholesky: return "cholesky";
    case SolveMethod::CG: return "cg";
    case SolveMethod::BiCGStab: return "bicgstab";
    case SolveMethod::GMRES: return "gmres";
  }
  return "?";
}

SolveMethod solve_method_from_string(const std::string& s) {
  if (s == "direct") return SolveMethod::Direct;
  if (s == "cholesky") return SolveMethod::Cholesky;
  if (s == "cg") return SolveMethod::CG;
  if (s == "bicgstab") return SolveMethod::BiCGStab;
  if (s == "gmres") return SolveMethod::GMRES;
  throw InvalidArgument("unknown solve method '" + s + "'");
}

namespace {

using ColMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

double rel_residual(const SpMat& A, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double nb = b.norm();
  const double nr = (A * x - b).norm();
  return nb > 0.0 ? nr / nb : nr;
}

template <class Solver>
Eigen::VectorXd iterate(Solver& s, const SpMat& A, const Eigen::VectorXd& b, const SolveOptions& opt,
                        SolveStats& st, const char* name) {
  s.setTolerance(0.5 * opt.tol);
  s.setMaxIterations(opt.max_iterations);
  s.compute(A);
  Eigen::VectorXd x = s.solve(b);
  st.iterations = static_cast<int>(s.iterations());
  if (s.info() != Eigen::Success)
    throw SolverFailure(std::string(name) + ": no convergence after " + std::to_string(s.iterations()) + " iterations",
                        rel_residual(A, x, b));
  return x;
}

}  // namespace

struct Factorization::Impl {
  // Direct methods factor D A D with D = diag(|a_ii|^-1/2) (1 on zero diagonal).
  Eigen::VectorXd d;
  SpMat scaled;
  ColMat col;
#ifdef HOMOG_HAVE_SUITESPARSE
  Eigen::UmfPackLU<ColMat> lu;
  Eigen::CholmodSupernodalLLT<ColMat, Eigen::Lower> llt;
#else
  Eigen::SparseLU<ColMat> lu;
  Eigen::SimplicialLDLT<ColMat, Eigen::Lower> llt;
#endif
};

Factorization::Factorization(SpMat matrix, bool symmetric, const SolveOptions& opt)
    : matrix_(std::move(matrix)), symmetric_(symmetric), opt_(opt), impl_(std::make_unique<Impl>()) {
  if (matrix_.rows() != matrix_.cols()) throw InvalidArgument("solve: matrix is not square");
  if (!symmetric_ && (opt_.method == SolveMethod::Cholesky || opt_.method == SolveMethod::CG))
    throw InvalidArgument("solve: " + to_string(opt_.method) + " requires a symmetric system");
  if (opt_.method == SolveMethod::Direct) {
    equilibrate();
    impl_->lu.compute(impl_->col);
    if (impl_->lu.info() != Eigen::Success)
      throw SolverFailure("sparse LU: factorization failed (matrix singular)", std::numeric_limits<double>::infinity());
  } else if (opt_.method == SolveMethod::Cholesky) {
    equilibrate();
    impl_->llt.compute(impl_->col);
    if (impl_->llt.info() != Eigen::Success)
      throw SolverFailure("sparse Cholesky: factorization failed (matrix not positive definite)",
                          std::numeric_limits<double>::infinity());
  }
}

void Factorization::equilibrate() {
  const int n = static_cast<int>(matrix_.rows());
  Eigen::VectorXd& d = impl_->d;
  d = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) {
    const double a = std::abs(matrix_.coeff(i, i));
    if (a > 0.0) d[i] = 1.0 / std::sqrt(a);
  }
  impl_->scaled = d.asDiagonal() * matrix_ * d.asDiagonal();
  impl_->col = impl_->scaled;
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& b, SolveStats* stats) const {
  const auto t0 = std::chrono::steady_clock::now();
  const SpMat& A = matrix_;
  if (A.rows() != b.size()) throw InvalidArgument("solve: dimension mismatch");
  SolveStats st;
  Eigen::VectorXd x;
  if (b.norm() == 0.0) {
    x = Eigen::VectorXd::Zero(b.size());
  } else {
    switch (opt_.method) {
      case SolveMethod::Direct:
      case SolveMethod::Cholesky: {
        auto apply = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
          Eigen::VectorXd y = opt_.method == SolveMethod::Direct ? Eigen::VectorXd(impl_->lu.solve(r))
                                                                 : Eigen::VectorXd(impl_->llt.solve(r));
          return y;
        };
        const SpMat& S = impl_->scaled;
        const Eigen::VectorXd sb = impl_->d.cwiseProduct(b);
        Eigen::VectorXd y = apply(sb);
        double rn = (sb - S * y).norm();
        for (int step = 0; step < 4 && rn > 1e-2 * opt_.tol * sb.norm(); ++step) {
          const Eigen::VectorXd z = y + apply(sb - S * y);
          const double zn = (sb - S * z).norm();
          if (!(zn < rn)) break;
          y = z;
          rn = zn;
        }
        x = impl_->d.cwiseProduct(y);
        st.relative_residual = rn / sb.norm();
        break;
      }
      case SolveMethod::CG: {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
        x = iterate(cg, A, b, opt_, st, "CG");
        break;
      }
      case SolveMethod::BiCGStab: {
        Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> bicg;
        x = iterate(bicg, A, b, opt_, st, "BiCGStab");
        break;
      }
      case SolveMethod::GMRES: {
        Eigen::GMRES<SpMat, Eigen::IncompleteLUT<double>> gm;
        gm.set_restart(200);
        x = iterate(gm, A, b, opt_, st, "GMRES");
        break;
      }
    }
  }
  if (opt_.method != SolveMethod::Direct && opt_.method != SolveMethod::Cholesky) st.relative_residual = rel_residual(A, x, b);
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (stats) *stats = st;
  if (!std::isfinite(st.relative_residual) || st.relative_residual > opt_.tol)
    throw SolverFailure("solve (" + to_string(opt_.method) + "): residual above tolerance", st.relative_residual);
  return x;
}

Eigen::VectorXd solve(const SparseSystem& system, const SolveOptions& opt, SolveStats* stats) {
  if (system.matrix.rows() != system.matrix.cols() || system.matrix.rows() != system.rhs.size())
    throw InvalidArgument("solve: dimension mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  const Factorization f(system.matrix, system.symmetric, opt);
  Eigen::VectorXd x = f.solve(system.rhs, stats);
  if (stats) stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return x;
}

}  // namespace homog
