#include "homog/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

using namespace homog;

namespace {

double total_area(const TriMesh& m) {
  long double s = 0.0L;
  for (std::size_t t = 0; t < m.n_triangles(); ++t) s += m.area(static_cast<int>(t));
  return static_cast<double>(s);
}

// Number of triangles on each edge, from a brute-force census.
std::map<std::pair<int, int>, int> edge_census(const TriMesh& m) {
  std::map<std::pair<int, int>, int> c;
  for (const auto& t : m.triangles())
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++c[{a, b}];
    }
  return c;
}

}  // namespace

TEST(UnitSquareMesh, SmallestMesh) {
  const auto m = unit_square_mesh(1);
  EXPECT_EQ(m.n_vertices(), 4u);
  EXPECT_EQ(m.n_triangles(), 2u);
  EXPECT_NEAR(m.h_max(), std::sqrt(2.0), 1e-15);
}

TEST(UnitSquareMesh, TwoByTwoPartitionsArea) {
  const auto m = unit_square_mesh(2);
  EXPECT_EQ(m.n_vertices(), 9u);
  EXPECT_EQ(m.n_triangles(), 8u);
  EXPECT_NEAR(total_area(m), 1.0, 1e-14);
}

TEST(UnitSquareMesh, RejectsZero) { EXPECT_THROW(unit_square_mesh(0), InvalidArgument); }

TEST(UnitSquareMesh, EdgeCensusN4) {
  for (auto pattern : {DiagonalPattern::Diagonal, DiagonalPattern::AntiDiagonal, DiagonalPattern::CrissCross}) {
    const auto m = unit_square_mesh(4, pattern);
    const auto census = edge_census(m);
    int boundary = 0;
    for (const auto& [e, n] : census) {
      const auto& p = m.vertices()[e.first];
      const auto& q = m.vertices()[e.second];
      const bool on_boundary = (p.x() == q.x() && (p.x() == 0.0 || p.x() == 1.0)) ||
                               (p.y() == q.y() && (p.y() == 0.0 || p.y() == 1.0));
      EXPECT_EQ(n, on_boundary ? 1 : 2);
      boundary += on_boundary;
    }
    EXPECT_EQ(boundary, 16);
    EXPECT_EQ(census.size(), m.n_edges());
    EXPECT_EQ(m.boundary_edges().size(), 16u);
  }
}

TEST(UnitSquareMesh, AreasSumToOneForManyN) {
  for (int n : {1, 3, 7, 16, 33})
    for (auto pattern : {DiagonalPattern::Diagonal, DiagonalPattern::CrissCross})
      EXPECT_NEAR(total_area(unit_square_mesh(n, pattern)), 1.0, 1e-14);
}

TEST(UnitSquareMesh, CrissCrossHasCenters) {
  const auto m = unit_square_mesh(2, DiagonalPattern::CrissCross);
  EXPECT_EQ(m.n_vertices(), 9u + 4u);
  EXPECT_EQ(m.n_triangles(), 16u);
  EXPECT_NEAR(m.h_max(), 0.5, 1e-15);
}

TEST(TriMesh, RejectsClockwiseTriangle) {
  std::vector<Vec2> v{{0, 0}, {1, 0}, {0, 1}};
  std::vector<Triangle> t{{0, 2, 1}};
  EXPECT_THROW(TriMesh(v, t, {{0, 1, 1}, {1, 2, 2}, {2, 0, 4}}), InvalidArgument);
}

TEST(TriMesh, RejectsUntaggedBoundary) {
  std::vector<Vec2> v{{0, 0}, {1, 0}, {0, 1}};
  std::vector<Triangle> t{{0, 1, 2}};
  EXPECT_THROW(TriMesh(v, t, {{0, 1, 1}}), InvalidArgument);
}

TEST(Refine, QuadruplesAndHalves) {
  const auto m = unit_square_mesh(1);
  const auto r = refine(m);
  EXPECT_EQ(r.n_triangles(), 8u);
  EXPECT_NEAR(r.h_max(), m.h_max() / 2.0, 1e-15);
  EXPECT_NEAR(total_area(r), total_area(m), 1e-14);
  EXPECT_NEAR(r.shape_ratio(), m.shape_ratio(), 1e-12);
  EXPECT_DOUBLE_EQ(r.grid_spacing(), 0.5);
}

TEST(Refine, PreservesConformityAndArea) {
  auto m = unit_square_mesh(3, DiagonalPattern::CrissCross);
  for (int i = 0; i < 2; ++i) {
    const auto r = refine(m);
    EXPECT_NEAR(total_area(r), 1.0, 1e-14);
    EXPECT_NEAR(r.shape_ratio(), m.shape_ratio(), 1e-10);
    for (const auto& [e, n] : edge_census(r)) EXPECT_LE(n, 2);
    m = r;
  }
}

TEST(Locate, FindsContainingTriangle) {
  const auto m = unit_square_mesh(8, DiagonalPattern::CrissCross);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int hint = -1;
  for (int i = 0; i < 500; ++i) {
    const Vec2 x(u(rng), u(rng));
    const int t = m.locate(x, hint);
    EXPECT_GE(m.barycentric(t, x).minCoeff(), -1e-12);
    hint = t;
  }
  EXPECT_NO_THROW(m.locate(Vec2(1.0, 1.0)));
  EXPECT_NO_THROW(m.locate(Vec2(0.0, 0.5)));
  EXPECT_THROW(m.locate(Vec2(1.1, 0.5)), LocationError);
}

TEST(PeriodicPairing, SingleCellCollapsesCorners) {
  const auto p = periodic_pairing(unit_square_mesh(1));
  EXPECT_EQ(p.n_free, 1);
  for (int v = 0; v < 4; ++v) EXPECT_EQ(p.master_of[v], 0);
}

TEST(PeriodicPairing, N2CountsByBruteForce) {
  const auto m = unit_square_mesh(2);
  const auto p = periodic_pairing(m);
  EXPECT_EQ(p.n_free, 4);
  // Brute force: two vertices are identified iff their coordinates agree modulo 1.
  auto key = [](const Vec2& x) {
    return std::make_pair(std::llround(std::fmod(x.x(), 1.0) * 1e6), std::llround(std::fmod(x.y(), 1.0) * 1e6));
  };
  std::map<std::pair<long long, long long>, int> classes;
  for (const auto& v : m.vertices()) classes[key(v)] = 0;
  EXPECT_EQ(static_cast<int>(classes.size()), p.n_free);
  for (std::size_t v = 0; v < m.n_vertices(); ++v)
    EXPECT_EQ(key(m.vertices()[v]), key(m.vertices()[p.master_of[v]]));
}

TEST(PeriodicPairing, IdempotentAndMatching) {
  const auto m = cell_mesh(6, DiagonalPattern::CrissCross, 1.0 / 12.0);
  const auto p = periodic_pairing(m);
  for (std::size_t v = 0; v < m.n_vertices(); ++v) {
    const int mv = p.master_of[v];
    EXPECT_EQ(p.master_of[mv], mv);
    const Vec2 d = m.vertices()[v] - m.vertices()[mv];
    EXPECT_NEAR(d.x() - std::round(d.x()), 0.0, 1e-12);
    EXPECT_NEAR(d.y() - std::round(d.y()), 0.0, 1e-12);
  }
  EXPECT_EQ(p.n_free, 6 * 6 + 6 * 6);
}

TEST(PeriodicPairing, IgnoresInteriorPerturbation) {
  const auto base = unit_square_mesh(5, DiagonalPattern::CrissCross);
  auto verts = base.vertices();
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  for (std::size_t v = 0; v < verts.size(); ++v)
    if (base.vertex_boundary_mask(static_cast<int>(v)) == 0) verts[v] += Vec2(u(rng), u(rng));
  const TriMesh perturbed(verts, base.triangles(), base.boundary_edges());
  EXPECT_EQ(periodic_pairing(perturbed).master_of, periodic_pairing(base).master_of);
}

TEST(PeriodicPairing, CommutesWithRefinement) {
  const auto m = unit_square_mesh(3, DiagonalPattern::AntiDiagonal);
  const auto r = refine(m);
  const auto pm = periodic_pairing(m);
  const auto pr = periodic_pairing(r);
  // Refinement keeps the coarse vertex numbering, so coarse masters must agree.
  for (std::size_t v = 0; v < m.n_vertices(); ++v) EXPECT_EQ(pr.master_of[v], pm.master_of[v]);
  EXPECT_EQ(pr.n_free, 36);
}

TEST(PeriodicPairing, RejectsMismatchedSides) {
  std::vector<Vec2> v{{0, 0}, {1, 0}, {1, 0.4}, {1, 1}, {0, 1}};
  std::vector<Triangle> t{{0, 1, 2}, {0, 2, 3}, {0, 3, 4}};
  std::vector<BoundaryEdge> b{{0, 1, 1}, {1, 2, 2}, {2, 3, 2}, {3, 4, 3}, {4, 0, 4}};
  const TriMesh m(v, t, b);
  EXPECT_THROW(periodic_pairing(m), PeriodicityMismatch);
}

TEST(MeshIo, RoundTrip) {
  const auto m = unit_square_mesh(3, DiagonalPattern::CrissCross);
  std::stringstream ss;
  write_mesh(ss, m);
  const auto r = read_mesh(ss);
  EXPECT_EQ(r.hash(), m.hash());
  EXPECT_EQ(r.boundary_edges().size(), m.boundary_edges().size());
}

TEST(MeshIo, RejectsBadHeader) {
  std::stringstream ss("tri-mesh v2\n0 0 0\n");
  EXPECT_THROW(read_mesh(ss), ParseError);
}

TEST(MacroGridTest, KEqualsHmax) {
  const MacroGrid g(unit_square_mesh(4));
  EXPECT_DOUBLE_EQ(g.k, g.mesh.h_max());
  EXPECT_EQ(g.nodes().size(), 25u);
}
