#include "homog/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace homog {

namespace {

constexpr double kBaryTol = 1e-12;
constexpr double kMatchTol = 1e-12;

std::array<int, 2> sorted_pair(int a, int b) { return a < b ? std::array{a, b} : std::array{b, a}; }

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

TriMesh::TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
                 std::vector<BoundaryEdge> boundary_edges, double grid_spacing,
                 double max_shape_ratio)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_edges_(std::move(boundary_edges)),
      max_shape_ratio_(max_shape_ratio) {
  if (vertices_.empty() || triangles_.empty()) throw InvalidArgument("mesh: empty vertex or triangle list");
  const int nv = static_cast<int>(vertices_.size());

  box_.lo = vertices_[0];
  box_.hi = vertices_[0];
  for (const auto& v : vertices_) {
    box_.lo = box_.lo.cwiseMin(v);
    box_.hi = box_.hi.cwiseMax(v);
  }

  areas_.resize(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tr = triangles_[t];
    for (int k = 0; k < 3; ++k)
      if (tr[k] < 0 || tr[k] >= nv) throw InvalidArgument("mesh: triangle " + std::to_string(t) + " has an out-of-range vertex");
    const Vec2 e1 = vertices_[tr[1]] - vertices_[tr[0]];
    const Vec2 e2 = vertices_[tr[2]] - vertices_[tr[0]];
    const double a2 = e1.x() * e2.y() - e1.y() * e2.x();
    if (!(a2 > 0.0)) throw InvalidArgument("mesh: triangle " + std::to_string(t) + " has nonpositive signed area");
    areas_[t] = 0.5 * a2;

    const double la = (vertices_[tr[1]] - vertices_[tr[2]]).norm();
    const double lb = (vertices_[tr[2]] - vertices_[tr[0]]).norm();
    const double lc = e1.norm();
    h_max_ = std::max({h_max_, la, lb, lc});
    const double circum = la * lb * lc / (4.0 * areas_[t]);
    const double in = areas_[t] / (0.5 * (la + lb + lc));
    shape_ratio_ = std::max(shape_ratio_, circum / in);
  }
  if (shape_ratio_ > max_shape_ratio_)
    throw InvalidArgument("mesh: shape ratio " + std::to_string(shape_ratio_) + " exceeds bound " +
                          std::to_string(max_shape_ratio_));

  grid_spacing_ = grid_spacing > 0.0 ? grid_spacing : h_max_ / std::sqrt(2.0);

  build_topology();
  build_buckets();

  hash_ = 1469598103934665603ull;
  for (const auto& v : vertices_) fnv_mix(hash_, v.data(), 2 * sizeof(double));
  for (const auto& t : triangles_) fnv_mix(hash_, t.data(), 3 * sizeof(int));
}

void TriMesh::build_topology() {
  struct HalfEdge {
    std::array<int, 2> key;
    int tri;
    int local;
  };
  std::vector<HalfEdge> half;
  half.reserve(3 * triangles_.size());
  for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
    const auto& tr = triangles_[t];
    for (int k = 0; k < 3; ++k) half.push_back({sorted_pair(tr[(k + 1) % 3], tr[(k + 2) % 3]), t, k});
  }
  std::sort(half.begin(), half.end(), [](const HalfEdge& a, const HalfEdge& b) {
    return a.key != b.key ? a.key < b.key : a.tri < b.tri;
  });

  tri_edges_.assign(triangles_.size(), {-1, -1, -1});
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    while (j < half.size() && half[j].key == half[i].key) ++j;
    if (j - i > 2) throw InvalidArgument("mesh: edge shared by more than two triangles");
    const int e = static_cast<int>(edges_.size());
    edges_.push_back(half[i].key);
    std::array<int, 2> tris{half[i].tri, -1};
    tri_edges_[half[i].tri][half[i].local] = e;
    if (j - i == 2) {
      tris[1] = half[i + 1].tri;
      tri_edges_[half[i + 1].tri][half[i + 1].local] = e;
      // Consistently oriented neighbours traverse the shared edge in opposite directions.
      const auto& t0 = triangles_[half[i].tri];
      const auto& t1 = triangles_[half[i + 1].tri];
      const int a0 = t0[(half[i].local + 1) % 3];
      const int a1 = t1[(half[i + 1].local + 1) % 3];
      if (a0 == a1) throw InvalidArgument("mesh: inconsistent orientation across an interior edge");
    }
    edge_tris_.push_back(tris);
    i = j;
  }

  edge_tag_.assign(edges_.size(), 0);
  vertex_mask_.assign(vertices_.size(), 0u);
  for (const auto& be : boundary_edges_) {
    const auto key = sorted_pair(be.a, be.b);
    const auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
    if (it == edges_.end() || *it != key) throw InvalidArgument("mesh: boundary edge is not a mesh edge");
    const auto e = static_cast<std::size_t>(it - edges_.begin());
    if (edge_tris_[e][1] != -1) throw InvalidArgument("mesh: boundary edge shared by two triangles");
    if (be.tag <= 0 || be.tag > 31) throw InvalidArgument("mesh: boundary tag must be in 1..31");
    if (edge_tag_[e] != 0) throw InvalidArgument("mesh: duplicate boundary edge");
    edge_tag_[e] = be.tag;
    vertex_mask_[be.a] |= 1u << (be.tag - 1);
    vertex_mask_[be.b] |= 1u << (be.tag - 1);
  }
  for (std::size_t e = 0; e < edges_.size(); ++e)
    if (edge_tris_[e][1] == -1 && edge_tag_[e] == 0)
      throw InvalidArgument("mesh: edge " + std::to_string(e) + " has one triangle but no boundary tag");
}

void TriMesh::build_buckets() {
  const double nt = static_cast<double>(triangles_.size());
  const Vec2 ext = box_.hi - box_.lo;
  const double side = std::sqrt(nt / 2.0) + 1.0;
  const double aspect = ext.x() / std::max(ext.y(), 1e-300);
  nbx_ = std::max(1, static_cast<int>(side * std::sqrt(aspect)));
  nby_ = std::max(1, static_cast<int>(side / std::sqrt(aspect)));

  auto cell_range = [&](double lo, double hi, double blo, double bext, int nb) {
    int a = static_cast<int>(std::floor((lo - blo) / bext * nb));
    int b = static_cast<int>(std::floor((hi - blo) / bext * nb));
    return std::array<int, 2>{std::clamp(a, 0, nb - 1), std::clamp(b, 0, nb - 1)};
  };

  std::vector<int> counts(static_cast<std::size_t>(nbx_) * nby_ + 1, 0);
  std::vector<std::array<int, 4>> ranges(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto c = corners(static_cast<int>(t));
    const Vec2 lo = c[0].cwiseMin(c[1]).cwiseMin(c[2]).array() - 1e-12;
    const Vec2 hi = c[0].cwiseMax(c[1]).cwiseMax(c[2]).array() + 1e-12;
    const auto rx = cell_range(lo.x(), hi.x(), box_.lo.x(), ext.x(), nbx_);
    const auto ry = cell_range(lo.y(), hi.y(), box_.lo.y(), ext.y(), nby_);
    ranges[t] = {rx[0], rx[1], ry[0], ry[1]};
    for (int j = ry[0]; j <= ry[1]; ++j)
      for (int i = rx[0]; i <= rx[1]; ++i) ++counts[j * nbx_ + i + 1];
  }
  for (std::size_t b = 1; b < counts.size(); ++b) counts[b] += counts[b - 1];
  bucket_start_ = counts;
  bucket_items_.resize(counts.back());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& r = ranges[t];
    for (int j = r[2]; j <= r[3]; ++j)
      for (int i = r[0]; i <= r[1]; ++i) bucket_items_[counts[j * nbx_ + i]++] = static_cast<int>(t);
  }
}

Eigen::Vector3d TriMesh::barycentric(int t, const Vec2& x) const {
  const auto c = corners(t);
  const Vec2 e1 = c[1] - c[0];
  const Vec2 e2 = c[2] - c[0];
  const Vec2 d = x - c[0];
  const double inv = 1.0 / (2.0 * areas_[t]);
  const double l1 = (d.x() * e2.y() - d.y() * e2.x()) * inv;
  const double l2 = (e1.x() * d.y() - e1.y() * d.x()) * inv;
  return {1.0 - l1 - l2, l1, l2};
}

bool TriMesh::contains(int t, const Vec2& x, double tol) const {
  return barycentric(t, x).minCoeff() >= -tol;
}

int TriMesh::locate(const Vec2& x, int hint) const {
  const int nt = static_cast<int>(triangles_.size());
  if (hint >= 0 && hint < nt) {
    int t = hint;
    for (int step = 0; step < 64; ++step) {
      const auto lam = barycentric(t, x);
      int k = 0;
      lam.minCoeff(&k);
      if (lam[k] >= -kBaryTol) return t;
      const auto& et = edge_tris_[tri_edges_[t][k]];
      const int next = et[0] == t ? et[1] : et[0];
      if (next < 0) break;
      t = next;
    }
  }
  const Vec2 ext = box_.hi - box_.lo;
  const int i = std::clamp(static_cast<int>(std::floor((x.x() - box_.lo.x()) / ext.x() * nbx_)), 0, nbx_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor((x.y() - box_.lo.y()) / ext.y() * nby_)), 0, nby_ - 1);
  const int b = j * nbx_ + i;
  int best = -1;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int p = bucket_start_[b]; p < bucket_start_[b + 1]; ++p) {
    const int t = bucket_items_[p];
    const double m = barycentric(t, x).minCoeff();
    if (m >= 0.0) return t;
    if (m > best_min) {
      best_min = m;
      best = t;
    }
  }
  if (best >= 0 && best_min >= -kBaryTol) return best;
  std::ostringstream os;
  os << "point (" << x.x() << ", " << x.y() << ") is outside the mesh";
  throw LocationError(os.str());
}

// ---------------------------------------------------------------------------

TriMesh rectangle_mesh(int nx, int ny, const Box& box, DiagonalPattern pattern) {
  if (nx < 1 || ny < 1) throw InvalidArgument("rectangle_mesh: need at least one cell per side");
  if (!(box.hi.x() > box.lo.x() && box.hi.y() > box.lo.y())) throw InvalidArgument("rectangle_mesh: empty box");

  const Vec2 ext = box.hi - box.lo;
  std::vector<Vec2> verts;
  const bool criss = pattern == DiagonalPattern::CrissCross;
  verts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1) + (criss ? nx * ny : 0));
  auto coord = [](double lo, double hi, int i, int n) { return i == n ? hi : lo + (hi - lo) * i / n; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      verts.emplace_back(coord(box.lo.x(), box.hi.x(), i, nx), coord(box.lo.y(), box.hi.y(), j, ny));
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  const int center0 = static_cast<int>(verts.size());
  if (criss)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        verts.emplace_back(box.lo.x() + ext.x() * (i + 0.5) / nx, box.lo.y() + ext.y() * (j + 0.5) / ny);

  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(nx) * ny * (criss ? 4 : 2));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      switch (pattern) {
        case DiagonalPattern::Diagonal:
          tris.push_back({v00, v10, v11});
          tris.push_back({v00, v11, v01});
          break;
        case DiagonalPattern::AntiDiagonal:
          tris.push_back({v00, v10, v01});
          tris.push_back({v10, v11, v01});
          break;
        case DiagonalPattern::CrissCross: {
          const int c = center0 + j * nx + i;
          tris.push_back({v00, v10, c});
          tris.push_back({v10, v11, c});
          tris.push_back({v11, v01, c});
          tris.push_back({v01, v00, c});
          break;
        }
      }
    }
  }

  std::vector<BoundaryEdge> bnd;
  for (int i = 0; i < nx; ++i) bnd.push_back({vid(i, 0), vid(i + 1, 0), kBottom});
  for (int j = 0; j < ny; ++j) bnd.push_back({vid(nx, j), vid(nx, j + 1), kRight});
  for (int i = nx; i > 0; --i) bnd.push_back({vid(i, ny), vid(i - 1, ny), kTop});
  for (int j = ny; j > 0; --j) bnd.push_back({vid(0, j), vid(0, j - 1), kLeft});

  const double spacing = std::max(ext.x() / nx, ext.y() / ny);
  return TriMesh(std::move(verts), std::move(tris), std::move(bnd), spacing);
}

TriMesh unit_square_mesh(int n, DiagonalPattern pattern) {
  if (n < 1) throw InvalidArgument("unit_square_mesh: n must be >= 1");
  return rectangle_mesh(n, n, Box{}, pattern);
}

TriMesh cell_mesh(int n, DiagonalPattern pattern, double shift) {
  if (n < 1) throw InvalidArgument("cell_mesh: n must be >= 1");
  Box box;
  box.lo = Vec2(shift, shift);
  box.hi = Vec2(1.0 + shift, 1.0 + shift);
  return rectangle_mesh(n, n, box, pattern);
}

TriMesh refine(const TriMesh& mesh) {
  const int nv = static_cast<int>(mesh.n_vertices());
  std::vector<Vec2> verts = mesh.vertices();
  verts.reserve(nv + mesh.n_edges());
  for (const auto& e : mesh.edges()) verts.push_back(0.5 * (mesh.vertices()[e[0]] + mesh.vertices()[e[1]]));

  std::vector<Triangle> tris;
  tris.reserve(4 * mesh.n_triangles());
  for (int t = 0; t < static_cast<int>(mesh.n_triangles()); ++t) {
    const auto& v = mesh.triangles()[t];
    const auto& te = mesh.triangle_edges(t);
    const int m0 = nv + te[0], m1 = nv + te[1], m2 = nv + te[2];
    tris.push_back({v[0], m2, m1});
    tris.push_back({m2, v[1], m0});
    tris.push_back({m1, m0, v[2]});
    tris.push_back({m0, m1, m2});
  }

  std::vector<BoundaryEdge> bnd;
  bnd.reserve(2 * mesh.boundary_edges().size());
  for (const auto& be : mesh.boundary_edges()) {
    const auto key = sorted_pair(be.a, be.b);
    const auto it = std::lower_bound(mesh.edges().begin(), mesh.edges().end(), key);
    const int mid = nv + static_cast<int>(it - mesh.edges().begin());
    bnd.push_back({be.a, mid, be.tag});
    bnd.push_back({mid, be.b, be.tag});
  }
  return TriMesh(std::move(verts), std::move(tris), std::move(bnd), 0.5 * mesh.grid_spacing(),
                 mesh.max_shape_ratio());
}

// ---------------------------------------------------------------------------

PeriodicPairing periodic_pairing(const TriMesh& mesh) {
  const auto& box = mesh.domain_box();
  const auto& X = mesh.vertices();
  const int nv = static_cast<int>(X.size());

  PeriodicPairing p;
  p.master_of.resize(nv);
  for (int v = 0; v < nv; ++v) p.master_of[v] = v;

  // Match slaves on side `axis == hi` to masters on `axis == lo`, keyed by the other coordinate.
  auto match_sides = [&](int axis) {
    const int other = 1 - axis;
    std::vector<std::pair<double, int>> lo_side, hi_side;
    for (int v = 0; v < nv; ++v) {
      if (std::abs(X[v][axis] - box.lo[axis]) <= kMatchTol) lo_side.emplace_back(X[v][other], v);
      if (std::abs(X[v][axis] - box.hi[axis]) <= kMatchTol) hi_side.emplace_back(X[v][other], v);
    }
    if (lo_side.size() != hi_side.size())
      throw PeriodicityMismatch("periodic_pairing: opposite sides carry different vertex counts (axis " +
                                std::to_string(axis) + ")");
    std::sort(lo_side.begin(), lo_side.end());
    std::sort(hi_side.begin(), hi_side.end());
    for (std::size_t i = 0; i < lo_side.size(); ++i) {
      if (std::abs(lo_side[i].first - hi_side[i].first) > kMatchTol)
        throw PeriodicityMismatch("periodic_pairing: vertex traces on opposite sides do not match (axis " +
                                  std::to_string(axis) + ")");
      p.master_of[hi_side[i].second] = lo_side[i].second;
    }
  };
  match_sides(0);
  match_sides(1);

  for (int v = 0; v < nv; ++v) {
    int m = v;
    for (int guard = 0; guard < 4 && p.master_of[m] != m; ++guard) m = p.master_of[m];
    p.master_of[v] = m;
  }

  p.free_index.assign(nv, -1);
  for (int v = 0; v < nv; ++v)
    if (p.master_of[v] == v) p.free_index[v] = p.n_free++;
  for (int v = 0; v < nv; ++v) p.free_index[v] = p.free_index[p.master_of[v]];
  return p;
}

// ---------------------------------------------------------------------------

void write_mesh(std::ostream& os, const TriMesh& mesh) {
  os << "tri-mesh v1\n";
  os << mesh.n_vertices() << ' ' << mesh.n_triangles() << ' ' << mesh.boundary_edges().size() << '\n';
  os << std::setprecision(17);
  for (const auto& v : mesh.vertices()) os << v.x() << ' ' << v.y() << '\n';
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& b : mesh.boundary_edges()) os << b.a << ' ' << b.b << ' ' << b.tag << '\n';
}

TriMesh read_mesh(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header.rfind("tri-mesh v1", 0) != 0) throw ParseError("read_mesh: missing 'tri-mesh v1' header", 0);
  std::size_t nv = 0, nt = 0, nb = 0;
  if (!(is >> nv >> nt >> nb)) throw ParseError("read_mesh: bad size line", static_cast<std::size_t>(is.tellg()));
  std::vector<Vec2> verts(nv);
  std::vector<Triangle> tris(nt);
  std::vector<BoundaryEdge> bnd(nb);
  auto fail = [&](const char* what) {
    throw ParseError(std::string("read_mesh: truncated ") + what + " section", static_cast<std::size_t>(is.tellg()));
  };
  for (auto& v : verts)
    if (!(is >> v.x() >> v.y())) fail("vertex");
  for (auto& t : tris)
    if (!(is >> t[0] >> t[1] >> t[2])) fail("triangle");
  for (auto& b : bnd)
    if (!(is >> b.a >> b.b >> b.tag)) fail("boundary");
  return TriMesh(std::move(verts), std::move(tris), std::move(bnd));
}

void save_mesh(const std::string& path, const TriMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  write_mesh(os, mesh);
}

TriMesh load_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open " + path);
  return read_mesh(is);
}

}  // namespace homog
