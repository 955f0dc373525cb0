#pragma once

#include "homog/common.hpp"
#include "homog/mesh.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace homog {

enum class SpaceKind { P1PerZeroMean, P1, P2, HCT };
enum class Constraint { None, ZeroMean, DirichletZero, DirichletZeroWithBoundaryGradient };

std::string to_string(SpaceKind k);
SpaceKind space_kind_from_string(const std::string& s);
std::string to_string(Constraint c);
Constraint constraint_from_string(const std::string& s);

/// Basis values on one element, up to 12 local functions.
struct BasisValues {
  int n = 0;
  std::array<double, 12> v{};
  std::array<Vec2, 12> g;
  std::array<Mat2, 12> h;
};

/// Finite element space over a mesh.
///
/// Global ("entity") dofs:
///   P1, P1PerZeroMean  one per vertex (per periodic master);
///   P2                 vertices, then edge midpoints;
///   HCT                (value, d/dx, d/dy) per vertex, then one normal
///                      derivative per edge along the edge's canonical normal
///                      rot_cw(x_b - x_a), a < b.
///
/// Constraints mark entity dofs as fixed; system_index() maps free dofs to a
/// dense 0..n_free-1 range and fixed dofs to -1.
class FeSpace {
 public:
  static std::shared_ptr<const FeSpace> create(SpaceKind kind, std::shared_ptr<const TriMesh> mesh,
                                               Constraint constraint = Constraint::None);

  SpaceKind kind() const { return kind_; }
  Constraint constraint() const { return constraint_; }
  const TriMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const TriMesh> mesh_ptr() const { return mesh_; }
  /// Only set for P1PerZeroMean.
  const PeriodicPairing* pairing() const { return pairing_ ? &*pairing_ : nullptr; }

  int n_dofs() const { return n_dofs_; }
  int n_local() const { return n_local_; }
  /// Number of integration pieces per element (3 for HCT, else 1).
  int n_pieces() const { return kind_ == SpaceKind::HCT ? 3 : 1; }
  /// Polynomial degree per piece.
  int degree() const { return kind_ == SpaceKind::P2 ? 2 : (kind_ == SpaceKind::HCT ? 3 : 1); }
  bool has_second_derivatives() const { return kind_ == SpaceKind::HCT; }
  bool periodic() const { return kind_ == SpaceKind::P1PerZeroMean; }

  /// Global entity dofs of triangle t in local order.
  void local_dofs(int t, int* out) const;

  const std::vector<int>& system_index() const { return system_index_; }
  int n_free() const { return n_free_; }
  const std::vector<bool>& fixed() const { return fixed_; }

  /// Basis functions of triangle t at x. `piece` selects the HCT subtriangle
  /// (-1: pick from the position). Hessians are filled only when order >= 2.
  void eval_basis(int t, const Vec2& x, int order, BasisValues& out, int piece = -1) const;

  /// Corners of integration piece p of triangle t (the triangle itself unless HCT).
  std::array<Vec2, 3> piece_corners(int t, int p) const;

  /// HCT subtriangle of t containing x.
  int hct_piece(int t, const Vec2& x) const;

  /// Canonical unit normal of edge e.
  Vec2 edge_normal(int e) const;

  /// Map a point into the periodic cell (identity for non-periodic spaces).
  Vec2 wrap(const Vec2& x) const;

 private:
  FeSpace(SpaceKind kind, std::shared_ptr<const TriMesh> mesh, Constraint constraint);
  void build_hct();
  void build_constraints();

  SpaceKind kind_;
  Constraint constraint_;
  std::shared_ptr<const TriMesh> mesh_;
  std::optional<PeriodicPairing> pairing_;
  int n_dofs_ = 0;
  int n_local_ = 0;
  std::vector<int> system_index_;
  std::vector<bool> fixed_;
  int n_free_ = 0;

  // HCT data: per element a shape id into the coefficient cache, centroid and scale.
  struct HctShape {
    Eigen::Matrix<double, 30, 12> B;
  };
  std::vector<HctShape> hct_shapes_;
  std::vector<int> hct_shape_of_;
  std::vector<Vec2> hct_center_;
  std::vector<double> hct_scale_;
};

using FeSpacePtr = std::shared_ptr<const FeSpace>;

/// Coefficient vector bound to a space (entity dofs).
class FeFunction {
 public:
  FeFunction() = default;
  FeFunction(FeSpacePtr space, Eigen::VectorXd coeffs);

  const FeSpace& space() const { return *space_; }
  FeSpacePtr space_ptr() const { return space_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  Eigen::VectorXd& coeffs() { return coeffs_; }
  bool valid() const { return static_cast<bool>(space_); }

  /// Value/gradient/Hessian inside triangle t.
  Jet eval_in_element(int t, const Vec2& x, int order, int piece = -1) const;

  /// Locates x (wrapped into the cell for periodic spaces) and evaluates.
  /// `hint` is read and updated when non-null. Order 2 on P1/P2 returns the
  /// element-interior Hessian. Throws LocationError outside the domain.
  Jet jet(const Vec2& x, int order, int* hint = nullptr) const;

  double value(const Vec2& x) const { return jet(x, 0).value; }
  Vec2 gradient(const Vec2& x) const { return jet(x, 1).grad; }
  Mat2 hessian(const Vec2& x) const;

  /// Integral over the mesh domain.
  double integral() const;

  JetFunction as_jet_function() const;

 private:
  FeSpacePtr space_;
  Eigen::VectorXd coeffs_;
};

/// Nodal interpolant. HCT needs order-1 data (values and gradients).
FeFunction interpolate(FeSpacePtr space, const JetFunction& f);
FeFunction interpolate(FeSpacePtr space, const ScalarFunction& f);

}  // namespace homog
