#include "homog/norms.hpp"

#include "homog/parallel.hpp"
#include "homog/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace homog {

int Norm::order() const {
  switch (kind) {
    case NormKind::L1:
    case NormKind::L2: return 0;
    case NormKind::H1:
    case NormKind::H1Semi: return 1;
    default: return 2;
  }
}

std::string to_string(const Norm& n) {
  const std::string kl = "(" + std::to_string(n.k + 1) + "," + std::to_string(n.l + 1) + ")";
  switch (n.kind) {
    case NormKind::L1: return "L1";
    case NormKind::L2: return "L2";
    case NormKind::H1: return "H1";
    case NormKind::H1Semi: return "H1semi";
    case NormKind::H2: return "H2";
    case NormKind::H2Semi: return "H2semi";
    case NormKind::L2OfEntry: return "L2" + kl;
    case NormKind::L1OfEntry: return "L1" + kl;
  }
  return "?";
}

Field zero_field() {
  return Field(JetFunction([](const Vec2&, int) { return Jet{}; }));
}

int oscillation_subcells(double h, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("oscillation_subcells: eps must be positive");
  return std::clamp(static_cast<int>(std::ceil(8.0 * h / eps - 1e-9)), 1, 16);
}

namespace {

constexpr int kChunk = 256;

struct Evaluator {
  const Field& field;
  const TriMesh& mesh;
  bool local = false;
  int hint = -1;

  Evaluator(const Field& f, const TriMesh& m) : field(f), mesh(m) {
    if (f.fe()) {
      const auto& fm = f.fe()->space().mesh();
      local = &fm == &m || fm.hash() == m.hash();
    }
  }

  Jet operator()(int t, int piece, const Vec2& x, int order) {
    if (!field.fe()) return field.fn()(x, order);
    if (local) return field.fe()->eval_in_element(t, x, order, piece);
    return field.fe()->jet(x, order, &hint);
  }
};

void check_order(const Field& f, int order) {
  if (order >= 2 && f.fe() && !f.fe()->space().has_second_derivatives())
    throw CapabilityError("norm needs second derivatives, " + to_string(f.fe()->space().kind()) +
                          " space does not provide them");
}

}  // namespace

std::vector<double> error_norms(const Field& a, const Field& b, const std::vector<Norm>& norms,
                                const NormOptions& opt) {
  const TriMesh* mesh = opt.mesh;
  if (!mesh && a.fe()) mesh = &a.fe()->space().mesh();
  if (!mesh && b.fe()) mesh = &b.fe()->space().mesh();
  if (!mesh) throw InvalidArgument("error_norm: no integration mesh");
  if (opt.subcell_refinement < 1) throw InvalidArgument("error_norm: subcell_refinement must be >= 1");

  int order = 0;
  for (const auto& n : norms) order = std::max(order, n.order());
  check_order(a, order);
  check_order(b, order);

  // HCT functions on the integration mesh are integrated piece by piece.
  const FeSpace* pieces = nullptr;
  for (const Field* f : {&a, &b})
    if (f->fe() && f->fe()->space().kind() == SpaceKind::HCT && Evaluator(*f, *mesh).local)
      pieces = &f->fe()->space();
  const int npieces = pieces ? 3 : 1;

  const auto& rule = triangle_rule(opt.quad_degree);
  const int s = opt.subcell_refinement;
  const int nt = static_cast<int>(mesh->n_triangles());
  const int nchunks = (nt + kChunk - 1) / kChunk;
  const std::size_t nn = norms.size();
  std::vector<double> partial(static_cast<std::size_t>(nchunks) * nn, 0.0);

  parallel_chunks(nchunks, [&](int chunk) {
    Evaluator ea(a, *mesh), eb(b, *mesh);
    double* acc = &partial[static_cast<std::size_t>(chunk) * nn];
    const int t1 = std::min(nt, (chunk + 1) * kChunk);
    for (int t = chunk * kChunk; t < t1; ++t) {
      for (int p = 0; p < npieces; ++p) {
        const auto c = pieces ? pieces->piece_corners(t, p) : mesh->corners(t);
        const int piece = pieces ? p : -1;
        const double sub_area =
            0.5 * std::abs((c[1] - c[0]).x() * (c[2] - c[0]).y() - (c[1] - c[0]).y() * (c[2] - c[0]).x()) / (s * s);
        const Vec2 e1 = (c[1] - c[0]) / s, e2 = (c[2] - c[0]) / s;
        for (int i = 0; i < s; ++i)
          for (int j = 0; i + j < s; ++j)
            for (int up = 0; up < 2; ++up) {
              if (up == 1 && i + j == s - 1) continue;
              // Subtriangle corners in the lattice spanned by e1, e2.
              std::array<Vec2, 3> sc;
              const Vec2 o = c[0] + i * e1 + j * e2;
              if (up == 0) sc = {o, o + e1, o + e2};
              else sc = {o + e1, o + e1 + e2, o + e2};
              for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const auto& l = rule.points[q];
                const Vec2 x = l[0] * sc[0] + l[1] * sc[1] + l[2] * sc[2];
                const double w = rule.weights[q] * sub_area;
                const Jet ja = ea(t, piece, x, order);
                const Jet jb = eb(t, piece, x, order);
                const double dv = ja.value - jb.value;
                const Vec2 dg = ja.grad - jb.grad;
                const Mat2 dh = ja.hess - jb.hess;
                for (std::size_t k = 0; k < nn; ++k) {
                  const Norm& n = norms[k];
                  double v = 0.0;
                  switch (n.kind) {
                    case NormKind::L1: v = std::abs(dv); break;
                    case NormKind::L2: v = dv * dv; break;
                    case NormKind::H1: v = dv * dv + dg.squaredNorm(); break;
                    case NormKind::H1Semi: v = dg.squaredNorm(); break;
                    case NormKind::H2: v = dv * dv + dg.squaredNorm() + dh.squaredNorm(); break;
                    case NormKind::H2Semi: v = dh.squaredNorm(); break;
                    case NormKind::L2OfEntry: v = dh(n.k, n.l) * dh(n.k, n.l); break;
                    case NormKind::L1OfEntry: v = std::abs(dh(n.k, n.l)); break;
                  }
                  acc[k] += w * v;
                }
              }
            }
      }
    }
  });

  std::vector<double> out(nn, 0.0);
  for (int chunk = 0; chunk < nchunks; ++chunk)
    for (std::size_t k = 0; k < nn; ++k) out[k] += partial[static_cast<std::size_t>(chunk) * nn + k];
  for (std::size_t k = 0; k < nn; ++k)
    if (norms[k].kind != NormKind::L1 && norms[k].kind != NormKind::L1OfEntry) out[k] = std::sqrt(out[k]);
  return out;
}

double error_norm(const Field& a, const Field& b, Norm norm, const NormOptions& opt) {
  return error_norms(a, b, {norm}, opt)[0];
}

}  // namespace homog
