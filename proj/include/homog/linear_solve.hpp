#pragma once

#include "homog/assembly.hpp"

#include <memory>
#include <string>

namespace homog {

/// Direct: sparse LU with partial pivoting (UMFPACK when available).
/// Cholesky: sparse Cholesky for SPD systems (CHOLMOD when available).
enum class SolveMethod { Direct, Cholesky, CG, BiCGStab, GMRES };

std::string to_string(SolveMethod m);
SolveMethod solve_method_from_string(const std::string& s);

struct SolveOptions {
  SolveMethod method = SolveMethod::Direct;
  double tol = 1e-10;
  int max_iterations = 20000;
};

struct SolveStats {
  double relative_residual = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

/// Solves the system; afterwards ||Ax - b|| <= tol ||b||, for direct methods
/// measured on the Jacobi-equilibrated system D A D y = D b. Throws
/// SolverFailure (residual attached) on breakdown, singular factorization or
/// non-convergence. CG requires the symmetric flag.
Eigen::VectorXd solve(const SparseSystem& system, const SolveOptions& opt = {}, SolveStats* stats = nullptr);

/// A matrix prepared once for many right-hand sides. Direct methods keep the
/// factorization; iterative methods rebuild their preconditioner per call.
class Factorization {
 public:
  Factorization(SpMat matrix, bool symmetric, const SolveOptions& opt = {});
  ~Factorization();
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;

  /// Same residual contract and errors as solve().
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, SolveStats* stats = nullptr) const;
  const SpMat& matrix() const { return matrix_; }

 private:
  struct Impl;
  void equilibrate();
  SpMat matrix_;
  bool symmetric_ = false;
  SolveOptions opt_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace homog
