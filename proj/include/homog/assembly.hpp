#pragma once

#include "homog/fe_space.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <variant>
#include <vector>

namespace homog {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Integration point handed to coefficient callbacks: physical position,
/// triangle and integration piece (HCT subtriangle, else 0).
struct QPoint {
  Vec2 x;
  int element = 0;
  int piece = 0;
};

using QScalar = std::function<double(const QPoint&)>;
using QVector = std::function<Vec2(const QPoint&)>;
using QMatrix = std::function<Mat2(const QPoint&)>;

namespace form {
/// int A grad u . grad v
struct GradAGrad { QMatrix A; };
/// int u (b . grad v)
struct UDivAGrad { QVector b; };
/// int (b . grad u) v
struct DivAGradU { QVector b; };
/// int c u v (c = 1 when empty)
struct Mass { QScalar c; };
/// int w (M : D2 u)(N : D2 v) (w = 1 when empty)
struct HessContractPair { QMatrix M; QMatrix N; QScalar w; };
/// int gamma (A : D2 u) Laplace v
struct CordesLS { QMatrix A; QScalar gamma; };

/// int f v
struct Load { QScalar f; };
/// int g . grad v
struct LoadGrad { QVector g; };
/// int w f (M : D2 v)
struct LoadAgainstContract { QScalar f; QMatrix M; QScalar w; };
/// int gamma f Laplace v
struct LoadAgainstLaplacian { QScalar f; QScalar gamma; };
/// int_{y_axis = position (mod period)} g v ds over the mesh.
struct LineLoad { int axis = 0; double position = 0.5; double period = 1.0; QScalar g; };
}  // namespace form

using BilinearTerm = std::variant<form::GradAGrad, form::UDivAGrad, form::DivAGradU, form::Mass,
                                  form::HessContractPair, form::CordesLS>;
using LinearTerm = std::variant<form::Load, form::LoadGrad, form::LoadAgainstContract, form::LoadAgainstLaplacian,
                                form::LineLoad>;

struct AssemblyOptions {
  /// Quadrature degree per integration piece; 0 picks 4 for P1/P2 and 6 for HCT.
  int quad_degree = 0;
};

/// Entity-level matrix K_ij = a(phi_j, phi_i) (row = test dof, column = trial
/// dof). Periodic identification is built into the dof maps; no other
/// constraints are applied. Throws MeshMismatch for spaces on different
/// meshes and CapabilityError for second-order forms on spaces without
/// second derivatives.
SpMat assemble_matrix(const FeSpace& test, const FeSpace& trial, const std::vector<BilinearTerm>& terms,
                      const AssemblyOptions& opt = {});
Eigen::VectorXd assemble_vector(const FeSpace& test, const std::vector<LinearTerm>& terms,
                                const AssemblyOptions& opt = {});

/// Square system with metadata.
struct SparseSystem {
  SpMat matrix;
  Eigen::VectorXd rhs;
  bool symmetric = false;
};

/// A constrained system plus what is needed to map its solution back.
struct ConstrainedSystem {
  SparseSystem system;
  FeSpacePtr space;
  Eigen::VectorXd fixed_values;
  bool bordered = false;
};

/// Removes fixed dofs (lifting their prescribed values, zero unless given)
/// and, for zero-mean spaces, borders the system with the Lagrange
/// multiplier row/column b_i = int phi_i.
ConstrainedSystem apply_constraints(FeSpacePtr space, const SpMat& K, const Eigen::VectorXd& F,
                                    const Eigen::VectorXd* fixed_values = nullptr, bool symmetric = false);

/// Entity coefficients from a solution of the constrained system.
Eigen::VectorXd recover(const ConstrainedSystem& cs, const Eigen::VectorXd& x);

/// Vector b_i = int phi_i.
Eigen::VectorXd basis_integrals(const FeSpace& space);

}  // namespace homog
