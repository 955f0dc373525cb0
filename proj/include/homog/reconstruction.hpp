#pragma once

#include "homog/cell_solver.hpp"
#include "homog/norms.hpp"
#include "homog/oracles.hpp"

#include <functional>
#include <memory>
#include <string>

namespace homog {

/// Corrector data at one point, indexed by sym_index.
struct CorrectorValues {
  /// z[ij][kl] ~ d2_kl chi_ij.
  double z[3][3] = {};
  /// chi_ij, filled when requested and available.
  double chi[3] = {};
};

/// Corrector data at macro point x and cell point y (already wrapped into
/// the unit cell). `with_chi` asks for corrector values as well.
using CorrectorSource = std::function<void(const Vec2& x, const Vec2& y, bool with_chi, CorrectorValues& out)>;

/// FE correctors and Hessian lifts of a cell solution; one point location
/// serves all fields.
CorrectorSource corrector_source(std::shared_ptr<const CellSolution> cell);
/// Closed-form Hessians of a y1-only coefficient (no corrector values).
CorrectorSource corrector_source(const SeparableOracle& oracle);
/// Closed-form Hessians of a diag(a11(x, y1), a22(x, y2)) coefficient.
CorrectorSource corrector_source(const DiagProductOracle& oracle);

/// u^kl(x) = d2_kl u0(x) + sum_ij z^kl_ij(x/eps) d2_ij u0(x) and the first
/// order ansatz u0 + eps^2 sum_ij chi_ij(x/eps) d2_ij u0.
class Reconstruction {
 public:
  Reconstruction(JetFunction u0, CorrectorSource source, double eps, bool has_chi);

  double epsilon() const { return eps_; }
  bool has_first_order() const { return has_chi_; }

  /// Symmetric by construction.
  Mat2 hessian(const Vec2& x) const;
  double hessian_entry(const Vec2& x, int k, int l) const { return hessian(x)(k, l); }
  /// Throws CapabilityError without corrector values.
  double first_order(const Vec2& x) const;

  /// Value and gradient of u0 with the reconstructed Hessian.
  JetFunction as_jet_function() const;

 private:
  Vec2 cell_point(const Vec2& x) const;

  JetFunction u0_;
  CorrectorSource source_;
  double eps_;
  bool has_chi_;
};

/// Throws CapabilityError unless u0_h is HCT and the cell carries Hessian lifts.
Reconstruction reconstruct(const FeFunction& u0_h, std::shared_ptr<const CellSolution> cell, double eps);

struct ErrorReport {
  double epsilon = 0.0;
  double h_cell = 0.0;
  double k_macro = 0.0;
  double h1_error = 0.0;
  /// L2 and L1 norms of d2_kl u_eps - u^kl, indexed by sym_index(k, l).
  double l2[3] = {};
  double l1[3] = {};
  /// h1^2 + l2[0]^2 + l2[1]^2 + l2[2]^2.
  double squared_total = 0.0;
  int subcells = 1;
  int quad_degree = 6;

  static std::string csv_header(bool with_eoc = false);
  /// eoc is written only when given; "-" when NaN.
  std::string csv_row(const double* eoc = nullptr) const;
};

struct ReportOptions {
  int quad_degree = 6;
  /// 0 picks oscillation_subcells(h, eps).
  int subcells = 0;
  /// Metadata.
  double h_cell = 0.0;
  double k_macro = 0.0;
};

/// Composite error between a fine-scale reference and a reconstruction,
/// integrated over the reference mesh. Refuses quadrature resolving fewer
/// than 4 subcells per period (InvalidArgument).
ErrorReport corrector_error_report(const FeFunction& u_eps_ref, const Reconstruction& recon,
                                   const ReportOptions& opt = {});

}  // namespace homog
