#pragma once

#include "homog/cell_solver.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace homog {

/// How HCT normal derivatives on the boundary are treated.
enum class BoundaryGradient {
  /// Prescribed from the gradient of an auxiliary P2 solve on a refined mesh.
  P2Aux,
  /// Left free.
  Natural,
};

std::string to_string(BoundaryGradient b);
BoundaryGradient boundary_gradient_from_string(const std::string& s);

/// One solve, as written to the run manifest.
struct RunRecord {
  std::string formulation;
  int n_dofs = 0;
  int n_free = 0;
  double h_max = 0.0;
  double grid_spacing = 0.0;
  double epsilon = 0.0;
  double residual = 0.0;
  double seconds = 0.0;
};

std::string to_json_line(const RunRecord& r);

/// Solver settings for macro problems: sparse LU, relative residual 1e-8.
inline SolveOptions default_macro_solve() {
  SolveOptions s;
  s.tol = 1e-8;
  return s;
}

struct MacroOptions {
  SolveOptions solve = default_macro_solve();
  BoundaryGradient boundary_gradient = BoundaryGradient::P2Aux;
  /// Uniform refinements of the macro mesh for the auxiliary P2 solve.
  int aux_refinements = 1;
  /// Fine-scale meshes need grid spacing <= epsilon / fine_ratio.
  double fine_ratio = 8.0;
  /// Receives one JSON line per solve when set (not owned).
  std::ostream* manifest = nullptr;
  /// Receives the record of the last solve when set (not owned).
  RunRecord* record = nullptr;
};

using MeshPtr = std::shared_ptr<const TriMesh>;

/// A0 : D2 u = f, u = 0 on the boundary, in divergence form with P2 elements.
FeFunction solve_homogenized_h1(const HomogenizedMatrix& a0, const ScalarFunction& f, MeshPtr mesh,
                                const MacroOptions& opt = {});

/// int (A0 : D2 u)(A0 : D2 v) = int f (A0 : D2 v) over HCT functions vanishing
/// on the boundary.
FeFunction solve_homogenized_h2(const HomogenizedMatrix& a0, const ScalarFunction& f, MeshPtr mesh,
                                const MacroOptions& opt = {});

/// The oscillatory problem A(x/eps) : D2 u = f by the Cordes least-squares
/// HCT formulation with gamma = tr A / |A|^2. Throws MeshTooCoarse when the
/// mesh does not resolve eps. The normal derivative on the boundary is free.
FeFunction solve_fine_scale(CellCoefficientPtr a, double eps, const ScalarFunction& f, MeshPtr mesh,
                            const MacroOptions& opt = {});
/// The same for A(x, x/eps).
FeFunction solve_fine_scale(MacroCoefficientPtr a, double eps, const ScalarFunction& f, MeshPtr mesh,
                            const MacroOptions& opt = {});

/// Variable-coefficient Cordes least-squares solve of A0(x) : D2 u = f with a
/// continuous piecewise linear matrix field given by its three entry fields.
FeFunction solve_variable_h2(const std::array<FeFunction, 3>& a0_field, const ScalarFunction& f,
                             const MacroOptions& opt = {});

struct NonuniformResult {
  /// A0_h at every macro node.
  std::vector<Mat2> a0_nodes;
  /// P1 fields of the entries (0,0), (0,1), (1,1).
  std::array<FeFunction, 3> a0_field;
  FeFunction u0;
  /// Interpolated A0 at x.
  Mat2 a0_at(const Vec2& x) const;
};

/// Cell problems with A(x_i, .) frozen at each node of the macro grid on an
/// aligned cell mesh with n cells per side, then the macro solve. Any failing
/// node aborts with its index and position in the message.
NonuniformResult solve_nonuniform(MacroCoefficientPtr a, const MacroGrid& grid, int cell_n, const ScalarFunction& f,
                                  const MacroOptions& opt = {});

}  // namespace homog
