#pragma once

#include "homog/assembly.hpp"
#include "homog/coefficients.hpp"
#include "homog/linear_solve.hpp"

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace homog {

struct HomogenizedMatrix {
  Mat2 entries = Mat2::Zero();
  /// Cell mesh size used.
  double h = 0.0;
  std::string quadrature_tag = "p1-interpolant";

  double operator()(int i, int j) const { return entries(i, j); }
  bool elliptic() const;
};

/// Storage slot of the symmetric pair (i, j): (0,0) -> 0, (0,1) -> 1, (1,1) -> 2.
inline int sym_index(int i, int j) { return i + j; }

/// The cell operator L v = -div(A grad v) + div A . grad v in the periodic
/// zero-mean P1 space, factored once and reused for every corrector and lift.
class CellOperator {
 public:
  CellOperator(CellCoefficientPtr a, FeSpacePtr space, const SolveOptions& opt = {});

  const CellCoefficient& coefficient() const { return *a_; }
  CellCoefficientPtr coefficient_ptr() const { return a_; }
  FeSpacePtr space() const { return space_; }

  /// Invariant measure m_h = m~_h + 1, solved at construction.
  const FeFunction& invariant_measure() const { return m_; }

  /// Solves L v = F - c b where F are entity load integrals, b_i = int phi_i
  /// and c = (m_h . F)/(m_h . b) makes the system exactly solvable. The
  /// first call factors the operator; not safe to call concurrently.
  FeFunction solve_shifted(const Eigen::VectorXd& F) const;

  /// Largest relative residual of the solves so far.
  double max_residual() const { return max_residual_; }

 private:
  CellCoefficientPtr a_;
  FeSpacePtr space_;
  SolveOptions opt_;
  Eigen::VectorXd b_;
  mutable SpMat K_;
  mutable std::unique_ptr<Factorization> adjoint_;
  FeFunction m_;
  mutable double max_residual_ = 0.0;
};

/// P1-periodic zero-mean space on a periodic cell mesh.
FeSpacePtr cell_space(const TriMesh& mesh);

/// m_h with int m_h = 1. Throws HTooCoarse when the bordered system is
/// singular.
FeFunction solve_invariant_measure(CellCoefficientPtr a, FeSpacePtr space, const SolveOptions& opt = {});

/// a0_ij = int I_h(a_ij m_h), exact for the P1 interpolant.
HomogenizedMatrix homogenized_matrix(const CellCoefficient& a, const FeFunction& m_h);

/// chi_ij with A : D2 chi = a0_ij - a_ij, periodic with zero mean.
FeFunction solve_corrector(const CellOperator& op, const HomogenizedMatrix& a0, int i, int j);

/// v_h ~ d_r chi_ij from the corrector approximation chi_h. Throws
/// CapabilityError if A has no second derivatives.
FeFunction derivative_lift(const CellOperator& op, const FeFunction& chi_h, int i, int j, int r);

/// z ~ d2_rs chi_ij from the first lifts v[0] ~ d_1 chi_ij, v[1] ~ d_2 chi_ij.
FeFunction second_derivative_lift(const CellOperator& op, const std::array<FeFunction, 2>& v, int i, int j, int r,
                                  int s);

struct CellSolveOptions {
  bool correctors = true;
  /// Gradient and Hessian lifts (needs second derivatives of A).
  bool hessians = true;
  SolveOptions solve;
};

/// Everything computed on one cell mesh.
struct CellSolution {
  CellCoefficientPtr coefficient;
  FeSpacePtr space;
  FeFunction m_h;
  HomogenizedMatrix A0_h;
  /// Indexed by sym_index(i, j).
  std::array<FeFunction, 3> correctors;
  /// gradient_lifts[sym_index(i, j)][r] ~ d_r chi_ij.
  std::array<std::array<FeFunction, 2>, 3> gradient_lifts;
  /// hessian_lifts[sym_index(i, j)][sym_index(k, l)] ~ d2_kl chi_ij.
  std::array<std::array<FeFunction, 3>, 3> hessian_lifts;
  double h = 0.0;
  double max_residual = 0.0;
  std::vector<std::string> warnings;

  bool has_correctors() const { return correctors[0].valid(); }
  bool has_hessians() const { return hessian_lifts[0][0].valid(); }
  const FeFunction& corrector(int i, int j) const { return correctors[sym_index(i, j)]; }
  const FeFunction& corrector_hessian(int i, int j, int k, int l) const {
    return hessian_lifts[sym_index(i, j)][sym_index(k, l)];
  }
};

CellSolution solve_cell(CellCoefficientPtr a, const TriMesh& mesh, const CellSolveOptions& opt = {});

/// Diagnostic of the divergence-form rewrite A m = A_div - B with B skew.
struct DivergenceFormReport {
  /// Elementwise constant B_h (entry (0,1); B_h(1,0) = -B_h(0,1)).
  std::vector<double> b12;
  /// max over elements of |B + B^T|.
  double skewness = 0.0;
  /// |int_Y B_h| (max entry).
  double mean = 0.0;
  /// max over basis functions phi and rows i of |int A_div grad phi| / ||phi||_H1.
  double weak_divergence_residual = 0.0;
};

DivergenceFormReport divergence_form_transform(const CellCoefficient& a, const FeFunction& m_h,
                                               const SolveOptions& opt = {});

/// Plain-text export: A0_h at full precision, h, and the given file references.
void write_cell_solution(std::ostream& os, const CellSolution& cell, const std::vector<std::string>& files = {});

}  // namespace homog
