#include "homog/cell_solver.hpp"
#include "homog/oracles.hpp"
#include "homog/study.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace homog;

namespace {

TriMesh mesh_of(const std::string& kind, int n) {
  if (kind == "aligned") return cell_mesh(n, DiagonalPattern::CrissCross);
  if (kind == "diagonal") return cell_mesh(n, DiagonalPattern::Diagonal);
  if (kind == "non_aligned") return cell_mesh(n, DiagonalPattern::Diagonal, 0.5 / n);
  throw InvalidArgument("mesh must be aligned, diagonal or non_aligned");
}

py::dict cell(const std::string& coef, int n, const std::string& mesh, bool lifts) {
  CellSolveOptions o;
  o.correctors = lifts;
  o.hessians = lifts;
  const auto cs = solve_cell(builtin_cell(coef), mesh_of(mesh, n), o);
  py::dict d;
  d["a0"] = Mat2(cs.A0_h.entries);
  d["h"] = cs.h;
  d["m_min"] = cs.m_h.coeffs().minCoeff();
  d["m_integral"] = cs.m_h.integral();
  d["max_residual"] = cs.max_residual;
  d["warnings"] = cs.warnings;
  return d;
}

py::dict study(const std::string& text, const std::string& out_dir) {
  std::istringstream is(text);
  const auto r = run_study(parse_study_config(is), out_dir);
  std::ostringstream csv;
  r.table.write_csv(csv);
  py::dict d;
  d["parameter"] = r.table.parameter;
  d["params"] = r.table.params;
  d["columns"] = r.table.columns;
  d["rows"] = r.table.rows;
  d["csv"] = csv.str();
  d["files"] = r.files;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite element homogenization of nondivergence-form problems";

  // Later registrations are tried first, so the base class goes first.
  const auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<LookupError>(m, "LookupError", base);
  py::register_exception<SolverFailure>(m, "SolverFailure", base);
  py::register_exception<WrongOracle>(m, "WrongOracle", base);

  m.def("solve_cell", &cell, py::arg("coef"), py::arg("n"), py::arg("mesh") = "aligned", py::arg("lifts") = false,
        "Cell solve on an n-by-n cell mesh; returns A0_h and diagnostics.");
  m.def(
      "oracle_a0", [](const std::string& coef) { return Mat2(oracle_y1_only(builtin_cell(coef)).A0); },
      py::arg("coef"), "Closed-form A0 of a y1-only coefficient.");
  m.def(
      "oracle_a0_at",
      [](const std::string& coef, double x1, double x2) {
        return Mat2(oracle_diag_product(builtin_macro(coef)).A0(Vec2(x1, x2)));
      },
      py::arg("coef"), py::arg("x1"), py::arg("x2"), "A0(x) of a diag(a11(x, y1), a22(x, y2)) coefficient.");
  m.def(
      "known_u0", [](double x1, double x2) { return known_u0("paper41").partial(Vec2(x1, x2), 0, 0); },
      py::arg("x1"), py::arg("x2"), "The polynomial u0 = x1(x1-1)x2(x2-1)/2.");
  m.def(
      "cordes_delta", [](const std::string& coef) { return cordes_check(*builtin_cell(coef)).delta; },
      py::arg("coef"));
  m.def("eoc", &eoc, py::arg("errors"), py::arg("sizes") = std::vector<double>{},
        "log(e[i-1]/e[i]) / log(s[i-1]/s[i]); NaN where undefined.");
  m.def("run_study", &study, py::arg("config"), py::arg("out_dir") = "",
        "Run a study from configuration text; returns the EOC table.");
}
