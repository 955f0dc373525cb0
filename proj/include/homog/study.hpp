#pragma once

#include "homog/reconstruction.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace homog {

/// Declarative convergence study, read from a flat `key = value` file.
struct StudyConfig {
  /// invariant_measure | homogenized_matrix | derivative_lift | macro |
  /// nonuniform | corrector_error | plateau
  std::string study;
  /// Builtin coefficient name, or "expression" with a11/a12/a22 below.
  std::string problem = "paper41";
  std::string a11, a12, a22;
  std::vector<int> cell_ladder;
  std::vector<int> macro_ladder;
  std::vector<double> epsilon_ladder;
  /// aligned (criss-cross) | diagonal | non_aligned (diagonal shifted by 1/(2n))
  std::string cell_mesh = "aligned";
  /// Fixed cell mesh when cell_ratio is 0.
  int cell_n = 256;
  /// Cell mesh with cell_ratio * K cells for macro grid 1/K.
  int cell_ratio = 0;
  /// Macro mesh for studies that need a single u0_h.
  int macro_n = 32;
  /// h1 | h2
  std::string formulation = "h2";
  std::string boundary_gradient = "p2_aux";
  int aux_refinements = 1;
  double epsilon = 0.0;
  double fine_ratio = 8.0;
  /// known | bump | expression in x1, x2
  std::string rhs = "known";
  /// exact | fe
  std::string u0 = "exact";
  /// oracle | fe
  std::string correctors = "oracle";
  int quad_degree = 6;
  int subcells = 0;
  std::string solver = "direct";
  /// 0 keeps the solver default.
  double tol = 0.0;
  unsigned rng_seed = 0;
  /// CSV file name; empty gives <study>.csv.
  std::string output;

  bool operator==(const StudyConfig&) const = default;
};

/// Throws ConfigError on unknown keys, malformed values or invalid ladders.
StudyConfig parse_study_config(std::istream& is);
StudyConfig load_study_config(const std::string& path);
std::string to_string(const StudyConfig& c);

/// EOC(i) = log(e(i-1)/e(i)) / log(s(i-1)/s(i)); log2 ratios when `sizes`
/// is empty. Undefined entries (first row, nonpositive or non-finite
/// errors) are NaN.
std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& sizes = {});

struct EocTable {
  /// Name and values of the ladder parameter (n, eps, k).
  std::string parameter;
  std::vector<double> params;
  /// Characteristic size per row for the EOC (1/n, eps, 1/K).
  std::vector<double> sizes;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  /// Columns that get an eoc_<name> column.
  std::vector<std::string> eoc_columns;

  void add_row(double param, double size, std::vector<double> values);
  std::vector<double> column(const std::string& name) const;
  std::vector<double> eoc_of(const std::string& name) const;
  /// Undefined values are written as "-".
  void write_csv(std::ostream& os) const;
  std::string format() const;
};

struct StudyResult {
  EocTable table;
  /// For corrector_error and plateau.
  std::vector<ErrorReport> reports;
  /// Plateau: raw and adjusted squared errors.
  EocTable adjusted;
  std::vector<std::string> files;
};

/// Runs the ladder and writes CSVs into `out_dir` (skipped when empty).
/// Solver failures are rethrown with the stage and ladder point prefixed.
StudyResult run_study(const StudyConfig& config, const std::string& out_dir = "", std::ostream* manifest = nullptr);

}  // namespace homog
