#pragma once

#include "homog/fe_space.hpp"

#include <string>
#include <vector>

namespace homog {

enum class NormKind { L1, L2, H1, H1Semi, H2, H2Semi, L2OfEntry, L1OfEntry };

/// A norm; (k, l) selects the Hessian entry for the *OfEntry kinds.
struct Norm {
  NormKind kind = NormKind::L2;
  int k = 0;
  int l = 0;

  static Norm l2_of_entry(int k, int l) { return {NormKind::L2OfEntry, k, l}; }
  static Norm l1_of_entry(int k, int l) { return {NormKind::L1OfEntry, k, l}; }
  int order() const;
};

std::string to_string(const Norm& n);

/// Something evaluable: an FE function (not owned) or a callable.
class Field {
 public:
  Field(const FeFunction& f) : fe_(&f) {}
  Field(JetFunction f) : fn_(std::move(f)) {}

  const FeFunction* fe() const { return fe_; }
  const JetFunction& fn() const { return fn_; }

 private:
  const FeFunction* fe_ = nullptr;
  JetFunction fn_;
};

/// The zero function.
Field zero_field();

struct NormOptions {
  /// Degree of the Gauss rule on each subtriangle.
  int quad_degree = 6;
  /// Each triangle (each HCT piece) is split uniformly into s^2 subtriangles.
  int subcell_refinement = 1;
  /// Integration mesh; defaults to the mesh of the first FE argument.
  const TriMesh* mesh = nullptr;
};

/// Subcell refinement resolving 8 points per period of length eps on cells
/// of size h: ceil(8 h / eps), capped at 16.
int oscillation_subcells(double h, double eps);

/// ||a - b|| for each requested norm, by composite quadrature over the
/// integration mesh. Throws CapabilityError when a norm needs second
/// derivatives of an FE function without them, InvalidArgument when no
/// integration mesh is known.
std::vector<double> error_norms(const Field& a, const Field& b, const std::vector<Norm>& norms,
                                const NormOptions& opt = {});
double error_norm(const Field& a, const Field& b, Norm norm, const NormOptions& opt = {});

}  // namespace homog
