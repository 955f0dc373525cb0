#include "homog/reconstruction.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace homog {

CorrectorSource corrector_source(std::shared_ptr<const CellSolution> cell) {
  if (!cell || !cell->has_hessians()) throw CapabilityError("corrector source needs a cell solution with Hessian lifts");
  return [cell](const Vec2&, const Vec2& y, bool with_chi, CorrectorValues& out) {
    const TriMesh& mesh = cell->space->mesh();
    thread_local int hint = -1;
    if (hint >= static_cast<int>(mesh.n_triangles())) hint = -1;
    const Vec2 yw = cell->space->wrap(y);
    const int t = mesh.locate(yw, hint);
    hint = t;
    for (int ij = 0; ij < 3; ++ij) {
      for (int kl = 0; kl < 3; ++kl) out.z[ij][kl] = cell->hessian_lifts[ij][kl].eval_in_element(t, yw, 0).value;
      if (with_chi) out.chi[ij] = cell->correctors[ij].eval_in_element(t, yw, 0).value;
    }
  };
}

CorrectorSource corrector_source(const SeparableOracle& oracle) {
  return [oracle](const Vec2&, const Vec2& y, bool, CorrectorValues& out) {
    for (int ij = 0; ij < 3; ++ij) {
      const int i = ij == 2, j = ij > 0;
      for (int kl = 0; kl < 3; ++kl) out.z[ij][kl] = oracle.corrector_hessian(i, j, kl == 2, kl > 0, y);
    }
  };
}

CorrectorSource corrector_source(const DiagProductOracle& oracle) {
  return [oracle](const Vec2& x, const Vec2& y, bool, CorrectorValues& out) {
    for (int ij = 0; ij < 3; ++ij) {
      const int i = ij == 2, j = ij > 0;
      for (int kl = 0; kl < 3; ++kl) out.z[ij][kl] = oracle.corrector_hessian(x, i, j, kl == 2, kl > 0, y);
    }
  };
}

Reconstruction::Reconstruction(JetFunction u0, CorrectorSource source, double eps, bool has_chi)
    : u0_(std::move(u0)), source_(std::move(source)), eps_(eps), has_chi_(has_chi) {
  if (!(eps_ > 0.0)) throw InvalidArgument("reconstruction: epsilon must be positive");
}

Vec2 Reconstruction::cell_point(const Vec2& x) const {
  const Vec2 y = x / eps_;
  return Vec2(y.x() - std::floor(y.x()), y.y() - std::floor(y.y()));
}

namespace {

// sum_ij c_ij d2_ij u0 for coefficients stored by sym_index.
double weighted(const double* c, const Mat2& H) { return c[0] * H(0, 0) + 2.0 * c[1] * H(0, 1) + c[2] * H(1, 1); }

Mat2 reconstructed(const Mat2& H, const CorrectorValues& cv) {
  double z[3][3];
  // Transpose to z_kl[ij] for the weighted sums.
  for (int ij = 0; ij < 3; ++ij)
    for (int kl = 0; kl < 3; ++kl) z[kl][ij] = cv.z[ij][kl];
  Mat2 out;
  out(0, 0) = H(0, 0) + weighted(z[0], H);
  out(0, 1) = out(1, 0) = H(0, 1) + weighted(z[1], H);
  out(1, 1) = H(1, 1) + weighted(z[2], H);
  return out;
}

}  // namespace

Mat2 Reconstruction::hessian(const Vec2& x) const {
  const Mat2 H = u0_(x, 2).hess;
  CorrectorValues cv;
  source_(x, cell_point(x), false, cv);
  return reconstructed(H, cv);
}

double Reconstruction::first_order(const Vec2& x) const {
  if (!has_chi_) throw CapabilityError("first-order ansatz needs corrector values");
  const Jet j = u0_(x, 2);
  CorrectorValues cv;
  source_(x, cell_point(x), true, cv);
  return j.value + eps_ * eps_ * weighted(cv.chi, j.hess);
}

JetFunction Reconstruction::as_jet_function() const {
  return [this](const Vec2& x, int order) {
    Jet j = u0_(x, std::max(order, 2));
    if (order >= 2) {
      CorrectorValues cv;
      source_(x, cell_point(x), false, cv);
      j.hess = reconstructed(j.hess, cv);
    }
    return j;
  };
}

Reconstruction reconstruct(const FeFunction& u0_h, std::shared_ptr<const CellSolution> cell, double eps) {
  if (!u0_h.space().has_second_derivatives())
    throw CapabilityError("reconstruction needs an H2-conforming (HCT) u0_h, got " + to_string(u0_h.space().kind()));
  if (!cell || !cell->has_hessians()) throw CapabilityError("reconstruction needs a cell solution with Hessian lifts");
  const FeFunction u = u0_h;
  JetFunction u0 = [u](const Vec2& x, int order) {
    thread_local int hint = -1;
    if (hint >= static_cast<int>(u.space().mesh().n_triangles())) hint = -1;
    return u.jet(x, order, &hint);
  };
  return Reconstruction(std::move(u0), corrector_source(cell), eps, true);
}

std::string ErrorReport::csv_header(bool with_eoc) {
  std::string h = "epsilon,h_cell,k_macro,h1_err,e11,e12,e22,squared_total";
  if (with_eoc) h += ",eoc";
  return h;
}

std::string ErrorReport::csv_row(const double* eoc) const {
  std::ostringstream os;
  os << std::setprecision(10) << epsilon << "," << h_cell << "," << k_macro << "," << h1_error << "," << l2[0] << ","
     << l2[1] << "," << l2[2] << "," << squared_total;
  if (eoc) {
    os << ",";
    if (std::isnan(*eoc)) os << "-";
    else os << std::setprecision(4) << *eoc;
  }
  return os.str();
}

ErrorReport corrector_error_report(const FeFunction& u_eps_ref, const Reconstruction& recon, const ReportOptions& opt) {
  const TriMesh& mesh = u_eps_ref.space().mesh();
  const double eps = recon.epsilon();
  const double h = mesh.h_max();
  const int s = opt.subcells > 0 ? opt.subcells : oscillation_subcells(h, eps);
  const double per_period = eps * s / h;
  if (per_period < 4.0) {
    std::ostringstream os;
    os << "error quadrature resolves only " << per_period << " subcells per period (eps = " << eps << ", h = " << h
       << ", subcells = " << s << "); need at least 4";
    throw InvalidArgument(os.str());
  }
  NormOptions no;
  no.quad_degree = opt.quad_degree;
  no.subcell_refinement = s;
  no.mesh = &mesh;
  const std::vector<Norm> norms{{NormKind::H1},       Norm::l2_of_entry(0, 0), Norm::l2_of_entry(0, 1),
                                Norm::l2_of_entry(1, 1), Norm::l1_of_entry(0, 0), Norm::l1_of_entry(0, 1),
                                Norm::l1_of_entry(1, 1)};
  const auto e = error_norms(u_eps_ref, recon.as_jet_function(), norms, no);
  ErrorReport r;
  r.epsilon = eps;
  r.h_cell = opt.h_cell;
  r.k_macro = opt.k_macro;
  r.h1_error = e[0];
  for (int k = 0; k < 3; ++k) {
    r.l2[k] = e[1 + k];
    r.l1[k] = e[4 + k];
  }
  r.squared_total = r.h1_error * r.h1_error + r.l2[0] * r.l2[0] + r.l2[1] * r.l2[1] + r.l2[2] * r.l2[2];
  r.subcells = s;
  r.quad_degree = opt.quad_degree;
  return r;
}

}  // namespace homog
