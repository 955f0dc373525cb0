#pragma once

#include "homog/common.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace homog {

/// Boundary tags used by the rectangle generators.
enum BoundaryTag : int { kBottom = 1, kRight = 2, kTop = 3, kLeft = 4 };

enum class DiagonalPattern { Diagonal, AntiDiagonal, CrissCross };

struct Box {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Ones();
};

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int tag = 0;
};

using Triangle = std::array<int, 3>;

/// Conforming triangulation of an axis-aligned rectangle.
///
/// Triangles are counterclockwise. Edge k of a triangle is the edge opposite
/// its local vertex k. The constructor validates orientation, conformity and
/// the shape-regularity bound and throws InvalidArgument on violation.
class TriMesh {
 public:
  TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
          std::vector<BoundaryEdge> boundary_edges, double grid_spacing = 0.0,
          double max_shape_ratio = 50.0);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
  std::size_t n_vertices() const { return vertices_.size(); }
  std::size_t n_triangles() const { return triangles_.size(); }
  std::size_t n_edges() const { return edges_.size(); }

  double h_max() const { return h_max_; }
  const Box& domain_box() const { return box_; }
  /// Nominal spacing of the generating grid (1/n for unit_square_mesh(n));
  /// h_max/sqrt(2) for imported meshes.
  double grid_spacing() const { return grid_spacing_; }
  /// Largest circumradius/inradius ratio over all triangles.
  double shape_ratio() const { return shape_ratio_; }
  double max_shape_ratio() const { return max_shape_ratio_; }

  /// Edges as sorted vertex pairs (a < b).
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  /// Global edge ids of triangle t, entry k opposite local vertex k.
  const std::array<int, 3>& triangle_edges(int t) const { return tri_edges_[t]; }
  /// The one or two triangles sharing an edge; second entry -1 on the boundary.
  const std::array<int, 2>& edge_triangles(int e) const { return edge_tris_[e]; }
  /// Boundary tag of edge e, 0 for interior edges.
  int edge_tag(int e) const { return edge_tag_[e]; }
  /// Bit (tag-1) is set when vertex v lies on a boundary edge with that tag.
  unsigned vertex_boundary_mask(int v) const { return vertex_mask_[v]; }

  std::array<Vec2, 3> corners(int t) const {
    const auto& tr = triangles_[t];
    return {vertices_[tr[0]], vertices_[tr[1]], vertices_[tr[2]]};
  }
  double area(int t) const { return areas_[t]; }

  /// Barycentric coordinates of x with respect to triangle t.
  Eigen::Vector3d barycentric(int t, const Vec2& x) const;

  /// Index of a triangle containing x (1e-12 barycentric tolerance). Walks
  /// from `hint` when given, else starts from a bucket lookup.
  /// Throws LocationError if x is outside the mesh.
  int locate(const Vec2& x, int hint = -1) const;

  /// FNV-1a hash over vertex coordinates and connectivity.
  std::uint64_t hash() const { return hash_; }

 private:
  void build_topology();
  void build_buckets();
  bool contains(int t, const Vec2& x, double tol) const;

  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<std::array<int, 2>> edge_tris_;
  std::vector<int> edge_tag_;
  std::vector<unsigned> vertex_mask_;
  std::vector<double> areas_;
  Box box_;
  double h_max_ = 0.0;
  double grid_spacing_ = 0.0;
  double shape_ratio_ = 0.0;
  double max_shape_ratio_ = 50.0;
  std::uint64_t hash_ = 0;

  int nbx_ = 1, nby_ = 1;
  std::vector<int> bucket_start_;
  std::vector<int> bucket_items_;
};

/// Uniform nx-by-ny triangulation of `box`. Triangle ordering is
/// row-major over grid cells.
TriMesh rectangle_mesh(int nx, int ny, const Box& box,
                       DiagonalPattern pattern = DiagonalPattern::Diagonal);

/// Uniform triangulation of (0,1)^2 with n cells per side.
TriMesh unit_square_mesh(int n, DiagonalPattern pattern = DiagonalPattern::Diagonal);

/// Triangulation of a translated unit cell [s, 1+s]^2. With s = 1/(2n) no grid
/// line of a single-diagonal mesh falls on y = k/2.
TriMesh cell_mesh(int n, DiagonalPattern pattern = DiagonalPattern::CrissCross,
                  double shift = 0.0);

/// Uniform red refinement: every triangle split into 4 similar children.
TriMesh refine(const TriMesh& mesh);

/// Identification of opposite sides of a rectangular cell.
struct PeriodicPairing {
  /// master_of[v] is the master vertex of v; masters map to themselves.
  std::vector<int> master_of;
  /// Dense index 0..n_free-1 of each vertex's master.
  std::vector<int> free_index;
  int n_free = 0;

  bool is_master(int v) const { return master_of[v] == v; }
};

/// Pairs vertices on the right/top sides with the left/bottom sides. Throws
/// PeriodicityMismatch if the traces do not match within 1e-12.
PeriodicPairing periodic_pairing(const TriMesh& mesh);

/// Macro triangulation over the physical domain; nodes are its vertices.
struct MacroGrid {
  explicit MacroGrid(TriMesh m) : mesh(std::move(m)), k(mesh.h_max()) {}
  const std::vector<Vec2>& nodes() const { return mesh.vertices(); }
  TriMesh mesh;
  double k;
};

void write_mesh(std::ostream& os, const TriMesh& mesh);
TriMesh read_mesh(std::istream& is);
void save_mesh(const std::string& path, const TriMesh& mesh);
TriMesh load_mesh(const std::string& path);

}  // namespace homog
