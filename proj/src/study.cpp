#include "homog/study.hpp"

#include "homog/expression.hpp"
#include "homog/macro_solver.hpp"
#include "homog/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace homog {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

// Strips a trailing comment outside quotes.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

struct Value {
  std::string text;
  int line;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("line " + std::to_string(line) + ": '" + key + "' " + what);
  }

  std::string str(const std::string& key) const {
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
      const std::string s = text.substr(1, text.size() - 2);
      if (s.find('"') != std::string::npos) fail(key, "contains a quote");
      return s;
    }
    if (text.empty() || text.find_first_of(" \t\"[]") != std::string::npos) fail(key, "expects a string");
    return text;
  }

  static double number(const std::string& t, bool& ok) {
    ok = false;
    const auto slash = t.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        const double v = std::stod(t, &used);
        ok = used == t.size();
        return v;
      }
      const std::string a = trim(t.substr(0, slash)), b = trim(t.substr(slash + 1));
      std::size_t ua = 0, ub = 0;
      const double num = std::stod(a, &ua), den = std::stod(b, &ub);
      ok = ua == a.size() && ub == b.size() && den != 0.0;
      return num / den;
    } catch (const std::exception&) {
      return 0.0;
    }
  }

  double real(const std::string& key) const {
    bool ok = false;
    const double v = number(text, ok);
    if (!ok || !std::isfinite(v)) fail(key, "expects a number");
    return v;
  }

  int integer(const std::string& key) const {
    const double v = real(key);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(key, "expects an integer");
    return static_cast<int>(v);
  }

  std::vector<std::string> items(const std::string& key) const {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']') fail(key, "expects a list [a, b, ...]");
    std::vector<std::string> out;
    std::stringstream ss(text.substr(1, text.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail(key, "has an empty list entry");
      out.push_back(item);
    }
    return out;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : items(key)) out.push_back(Value{s, line}.real(key));
    return out;
  }

  std::vector<int> integers(const std::string& key) const {
    std::vector<int> out;
    for (const auto& s : items(key)) out.push_back(Value{s, line}.integer(key));
    return out;
  }
};

using Setter = std::function<void(StudyConfig&, const std::string&, const Value&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto str = [&t](const char* k, std::string StudyConfig::*m) {
      t[k] = [m](StudyConfig& c, const std::string& key, const Value& v) { c.*m = v.str(key); };
    };
    auto integer = [&t](const char* k, int StudyConfig::*m) {
      t[k] = [m](StudyConfig& c, const std::string& key, const Value& v) { c.*m = v.integer(key); };
    };
    auto real = [&t](const char* k, double StudyConfig::*m) {
      t[k] = [m](StudyConfig& c, const std::string& key, const Value& v) { c.*m = v.real(key); };
    };
    str("study", &StudyConfig::study);
    str("problem", &StudyConfig::problem);
    str("a11", &StudyConfig::a11);
    str("a12", &StudyConfig::a12);
    str("a22", &StudyConfig::a22);
    t["cell_ladder"] = [](StudyConfig& c, const std::string& k, const Value& v) { c.cell_ladder = v.integers(k); };
    t["macro_ladder"] = [](StudyConfig& c, const std::string& k, const Value& v) { c.macro_ladder = v.integers(k); };
    t["epsilon_ladder"] = [](StudyConfig& c, const std::string& k, const Value& v) { c.epsilon_ladder = v.reals(k); };
    str("cell_mesh", &StudyConfig::cell_mesh);
    integer("cell_n", &StudyConfig::cell_n);
    integer("cell_ratio", &StudyConfig::cell_ratio);
    integer("macro_n", &StudyConfig::macro_n);
    str("formulation", &StudyConfig::formulation);
    str("boundary_gradient", &StudyConfig::boundary_gradient);
    integer("aux_refinements", &StudyConfig::aux_refinements);
    real("epsilon", &StudyConfig::epsilon);
    real("fine_ratio", &StudyConfig::fine_ratio);
    str("rhs", &StudyConfig::rhs);
    str("u0", &StudyConfig::u0);
    str("correctors", &StudyConfig::correctors);
    integer("quad_degree", &StudyConfig::quad_degree);
    integer("subcells", &StudyConfig::subcells);
    str("solver", &StudyConfig::solver);
    real("tol", &StudyConfig::tol);
    t["rng_seed"] = [](StudyConfig& c, const std::string& k, const Value& v) {
      const int s = v.integer(k);
      if (s < 0) v.fail(k, "must be nonnegative");
      c.rng_seed = static_cast<unsigned>(s);
    };
    str("output", &StudyConfig::output);
    return t;
  }();
  return table;
}

void require_one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  throw ConfigError("'" + key + "' must be one of " + list + ", got '" + v + "'");
}

template <class T, class Cmp>
void require_monotone(const std::string& key, const std::vector<T>& v, Cmp strictly_before, const char* what) {
  if (v.empty()) throw ConfigError("'" + key + "' must not be empty for this study");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!strictly_before(v[i - 1], v[i])) throw ConfigError("'" + key + "' must be strictly " + what);
}

void validate(const StudyConfig& c) {
  if (c.study.empty()) throw ConfigError("missing 'study'");
  require_one_of("study", c.study,
                 {"invariant_measure", "homogenized_matrix", "derivative_lift", "macro", "nonuniform",
                  "corrector_error", "plateau"});
  require_one_of("cell_mesh", c.cell_mesh, {"aligned", "diagonal", "non_aligned"});
  require_one_of("formulation", c.formulation, {"h1", "h2"});
  require_one_of("boundary_gradient", c.boundary_gradient, {"p2_aux", "natural"});
  require_one_of("u0", c.u0, {"exact", "fe"});
  require_one_of("correctors", c.correctors, {"oracle", "fe"});
  require_one_of("solver", c.solver, {"direct", "cholesky", "cg", "bicgstab", "gmres"});
  if (c.problem == "expression" && (c.a11.empty() || c.a12.empty() || c.a22.empty()))
    throw ConfigError("problem = expression needs a11, a12 and a22");
  if (c.cell_n < 2 || c.macro_n < 1 || c.cell_ratio < 0 || c.aux_refinements < 0 || c.quad_degree < 1 ||
      c.subcells < 0 || c.tol < 0.0 || !(c.fine_ratio > 0.0))
    throw ConfigError("cell_n, macro_n, cell_ratio, aux_refinements, quad_degree, subcells, tol or fine_ratio out of range");
  const auto up = [](int a, int b) { return a < b; };
  const auto down = [](double a, double b) { return a > b; };
  const std::string& s = c.study;
  if (s == "invariant_measure" || s == "homogenized_matrix" || s == "derivative_lift")
    require_monotone("cell_ladder", c.cell_ladder, up, "increasing");
  if (s == "macro" || s == "nonuniform" || s == "plateau") require_monotone("macro_ladder", c.macro_ladder, up, "increasing");
  for (int n : c.cell_ladder)
    if (n < 2) throw ConfigError("cell_ladder entries must be >= 2");
  for (int n : c.macro_ladder)
    if (n < 1) throw ConfigError("macro_ladder entries must be >= 1");
  if (s == "corrector_error") require_monotone("epsilon_ladder", c.epsilon_ladder, down, "decreasing");
  for (double e : c.epsilon_ladder)
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("epsilon_ladder entries must lie in (0, 1]");
  if (s == "plateau" && !(c.epsilon > 0.0 && c.epsilon <= 1.0)) throw ConfigError("plateau needs epsilon in (0, 1]");
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

std::string real_text(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <class T>
std::string list_text(const std::vector<T>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, double>) out += real_text(v[i]);
    else out += std::to_string(v[i]);
  }
  return out + "]";
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "-";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

StudyConfig parse_study_config(std::istream& is) {
  StudyConfig c;
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen;
  while (std::getline(is, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const Value value{trim(s.substr(eq + 1)), line};
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    if (seen.count(key))
      throw ConfigError("line " + std::to_string(line) + ": '" + key + "' repeats line " + std::to_string(seen[key]));
    seen[key] = line;
    it->second(c, key, value);
  }
  validate(c);
  return c;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config '" + path + "'");
  return parse_study_config(is);
}

std::string to_string(const StudyConfig& c) {
  std::ostringstream os;
  os << "study = " << quote(c.study) << "\n";
  os << "problem = " << quote(c.problem) << "\n";
  if (!c.a11.empty()) os << "a11 = " << quote(c.a11) << "\n";
  if (!c.a12.empty()) os << "a12 = " << quote(c.a12) << "\n";
  if (!c.a22.empty()) os << "a22 = " << quote(c.a22) << "\n";
  if (!c.cell_ladder.empty()) os << "cell_ladder = " << list_text(c.cell_ladder) << "\n";
  if (!c.macro_ladder.empty()) os << "macro_ladder = " << list_text(c.macro_ladder) << "\n";
  if (!c.epsilon_ladder.empty()) os << "epsilon_ladder = " << list_text(c.epsilon_ladder) << "\n";
  os << "cell_mesh = " << quote(c.cell_mesh) << "\n";
  os << "cell_n = " << c.cell_n << "\n";
  os << "cell_ratio = " << c.cell_ratio << "\n";
  os << "macro_n = " << c.macro_n << "\n";
  os << "formulation = " << quote(c.formulation) << "\n";
  os << "boundary_gradient = " << quote(c.boundary_gradient) << "\n";
  os << "aux_refinements = " << c.aux_refinements << "\n";
  os << "epsilon = " << real_text(c.epsilon) << "\n";
  os << "fine_ratio = " << real_text(c.fine_ratio) << "\n";
  os << "rhs = " << quote(c.rhs) << "\n";
  os << "u0 = " << quote(c.u0) << "\n";
  os << "correctors = " << quote(c.correctors) << "\n";
  os << "quad_degree = " << c.quad_degree << "\n";
  os << "subcells = " << c.subcells << "\n";
  os << "solver = " << quote(c.solver) << "\n";
  os << "tol = " << real_text(c.tol) << "\n";
  os << "rng_seed = " << c.rng_seed << "\n";
  if (!c.output.empty()) os << "output = " << quote(c.output) << "\n";
  return os.str();
}

std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& sizes) {
  if (!sizes.empty() && sizes.size() != errors.size()) throw InvalidArgument("eoc: errors and sizes differ in length");
  std::vector<double> out(errors.size(), kNaN);
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double a = errors[i - 1], b = errors[i];
    if (!(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b))) continue;
    const double r = sizes.empty() ? 2.0 : sizes[i - 1] / sizes[i];
    if (!(r > 0.0) || r == 1.0) continue;
    out[i] = std::log(a / b) / std::log(r);
  }
  return out;
}

void EocTable::add_row(double param, double size, std::vector<double> values) {
  if (values.size() != columns.size()) throw InvalidArgument("EocTable: row width differs from the columns");
  params.push_back(param);
  sizes.push_back(size);
  rows.push_back(std::move(values));
}

std::vector<double> EocTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw LookupError("EocTable: no column '" + name + "'");
  const auto c = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

std::vector<double> EocTable::eoc_of(const std::string& name) const { return eoc(column(name), sizes); }

void EocTable::write_csv(std::ostream& os) const {
  os << parameter;
  for (const auto& c : columns) os << "," << c;
  for (const auto& c : eoc_columns) os << ",eoc_" << c;
  os << "\n";
  std::vector<std::vector<double>> e;
  for (const auto& c : eoc_columns) e.push_back(eoc_of(c));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << csv_number(params[i]);
    for (double v : rows[i]) os << "," << csv_number(v);
    for (const auto& col : e) os << "," << csv_number(col[i]);
    os << "\n";
  }
}

std::string EocTable::format() const {
  std::vector<std::string> head{parameter};
  head.insert(head.end(), columns.begin(), columns.end());
  for (const auto& c : eoc_columns) head.push_back("eoc_" + c);
  std::vector<std::vector<double>> e;
  for (const auto& c : eoc_columns) e.push_back(eoc_of(c));
  std::vector<std::vector<std::string>> cells;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::string> r{csv_number(params[i])};
    for (double v : rows[i]) {
      std::ostringstream os;
      if (std::isfinite(v)) os << std::setprecision(6) << v;
      else os << "-";
      r.push_back(os.str());
    }
    for (const auto& col : e) {
      std::ostringstream os;
      if (std::isfinite(col[i])) os << std::fixed << std::setprecision(2) << col[i];
      else os << "-";
      r.push_back(os.str());
    }
    cells.push_back(std::move(r));
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t j = 0; j < head.size(); ++j) {
    width[j] = head[j].size();
    for (const auto& r : cells) width[j] = std::max(width[j], r[j].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "  " : "") << std::setw(static_cast<int>(width[j])) << r[j];
    os << "\n";
  };
  line(head);
  for (const auto& r : cells) line(r);
  return os.str();
}

namespace {

struct Problem {
  CellCoefficientPtr cell;
  MacroCoefficientPtr macro;
  std::string name;
};

Problem resolve_problem(const StudyConfig& c) {
  const AnyCoefficient any =
      c.problem == "expression" ? parse_expression_field(c.a11, c.a12, c.a22, true) : builtin(c.problem);
  Problem p;
  p.name = c.problem;
  if (std::holds_alternative<CellCoefficientPtr>(any)) p.cell = std::get<CellCoefficientPtr>(any);
  else p.macro = std::get<MacroCoefficientPtr>(any);
  return p;
}

const CellCoefficientPtr& need_cell(const Problem& p, const std::string& study) {
  if (!p.cell) throw ConfigError(study + " needs an x-independent coefficient, '" + p.name + "' depends on x");
  return p.cell;
}

const MacroCoefficientPtr& need_macro(const Problem& p, const std::string& study) {
  if (!p.macro) throw ConfigError(study + " needs an x-dependent coefficient, '" + p.name + "' is a cell field");
  return p.macro;
}

SolveOptions solve_options(const StudyConfig& c, SolveOptions base) {
  base.method = solve_method_from_string(c.solver);
  if (c.tol > 0.0) base.tol = c.tol;
  return base;
}

MacroOptions macro_options(const StudyConfig& c, std::ostream* manifest) {
  MacroOptions o;
  o.solve = solve_options(c, default_macro_solve());
  o.boundary_gradient = boundary_gradient_from_string(c.boundary_gradient);
  o.aux_refinements = c.aux_refinements;
  o.fine_ratio = c.fine_ratio;
  o.manifest = manifest;
  return o;
}

TriMesh make_cell_mesh(const StudyConfig& c, int n) {
  if (c.cell_mesh == "aligned") return cell_mesh(n, DiagonalPattern::CrissCross);
  if (c.cell_mesh == "diagonal") return cell_mesh(n, DiagonalPattern::Diagonal);
  return cell_mesh(n, DiagonalPattern::Diagonal, 0.5 / n);
}

MeshPtr square(int n) { return std::make_shared<const TriMesh>(unit_square_mesh(n)); }

ScalarFunction bump_rhs() {
  return [](const Vec2& x) {
    const double d = 0.5 - (x.x() - 0.5) * (x.x() - 0.5) - (x.y() - 0.5) * (x.y() - 0.5);
    return d > 0.0 ? std::exp(-1.0 / d) : 0.0;
  };
}

bool known_rhs(const StudyConfig& c) { return c.rhs == "known"; }

// The right-hand side; "known" pairs the exact homogenized matrix with the
// polynomial u0.
ScalarFunction make_rhs(const StudyConfig& c, const std::function<Mat2(const Vec2&)>& exact_a0) {
  if (c.rhs == "known") return rhs_for_known_u0(exact_a0);
  if (c.rhs == "bump") return bump_rhs();
  const auto e = std::make_shared<const Expression>(Expression::parse(c.rhs, true));
  return [e](const Vec2& x) { return e->eval(ExprVars{x.x(), x.y(), 0.0, 0.0}); };
}

std::function<Mat2(const Vec2&)> exact_a0(const Problem& p) {
  if (p.cell) {
    const Mat2 a0 = oracle_y1_only(p.cell).A0;
    return [a0](const Vec2&) { return a0; };
  }
  const auto o = std::make_shared<const DiagProductOracle>(oracle_diag_product(p.macro));
  return [o](const Vec2& x) { return o->A0(x); };
}

template <class F>
auto stage(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const SolverFailure& e) {
    throw SolverFailure(what, e);
  }
}

std::string at(const char* name, double v) {
  std::ostringstream os;
  os << name << " = " << v;
  return os.str();
}

CellSolveOptions cell_options(const StudyConfig& c, bool correctors, bool hessians) {
  CellSolveOptions o;
  o.correctors = correctors;
  o.hessians = hessians;
  o.solve = solve_options(c, SolveOptions{});
  return o;
}

StudyResult cell_ladder_study(const StudyConfig& c, const Problem& p) {
  const auto& a = need_cell(p, c.study);
  std::optional<SeparableOracle> oracle;
  try {
    oracle = oracle_y1_only(a);
  } catch (const WrongOracle&) {
  }
  StudyResult r;
  auto& t = r.table;
  t.parameter = "n";
  t.columns = {"h", "a11", "a12", "a22", "m_l2_err", "a0_err"};
  t.eoc_columns = {"m_l2_err", "a0_err"};
  for (int n : c.cell_ladder) {
    const auto cs = stage("cell solve at " + at("n", n) + " (" + c.cell_mesh + ")", [&] {
      return solve_cell(a, make_cell_mesh(c, n), cell_options(c, false, false));
    });
    double em = kNaN, ea = kNaN;
    if (oracle) {
      const auto& o = *oracle;
      const JetFunction m = [&o](const Vec2& y, int) {
        Jet j;
        j.value = o.m_exact(y);
        return j;
      };
      NormOptions no;
      no.quad_degree = c.quad_degree;
      em = error_norm(cs.m_h, m, {NormKind::L2}, no);
      ea = (cs.A0_h.entries - o.A0).cwiseAbs().maxCoeff();
    }
    t.add_row(n, 1.0 / n, {cs.h, cs.A0_h(0, 0), cs.A0_h(0, 1), cs.A0_h(1, 1), em, ea});
  }
  return r;
}

StudyResult derivative_lift_study(const StudyConfig& c, const Problem& p) {
  const auto& a = need_cell(p, c.study);
  const auto o = oracle_y1_only(a);
  StudyResult r;
  auto& t = r.table;
  t.parameter = "n";
  t.columns = {"h", "v11_h1_err", "z11_l2_err", "v_h1_err_max", "z_l2_err_max"};
  t.eoc_columns = {"v11_h1_err", "z11_l2_err", "v_h1_err_max", "z_l2_err_max"};
  NormOptions no;
  no.quad_degree = c.quad_degree;
  for (int n : c.cell_ladder) {
    const auto cs = stage("cell solve with lifts at " + at("n", n), [&] {
      return solve_cell(a, make_cell_mesh(c, n), cell_options(c, true, true));
    });
    double v11 = 0, z11 = 0, vmax = 0, zmax = 0;
    for (int ij = 0; ij < 3; ++ij) {
      const int i = ij == 2, j = ij > 0;
      // d_1 chi_ij; chi depends on y1 only, so its gradient is (d2_11 chi_ij, 0).
      const JetFunction v = [&o, i, j](const Vec2& y, int) {
        Jet q;
        q.value = o.corrector_gradient(i, j, 0, y);
        q.grad = Vec2(o.corrector_hessian(i, j, 0, 0, y), 0.0);
        return q;
      };
      const double ev = error_norm(cs.gradient_lifts[ij][0], v, {NormKind::H1}, no);
      vmax = std::max(vmax, ev);
      if (ij == 0) v11 = ev;
      for (int kl = 0; kl < 3; ++kl) {
        const int k = kl == 2, l = kl > 0;
        const JetFunction z = [&o, i, j, k, l](const Vec2& y, int) {
          Jet q;
          q.value = o.corrector_hessian(i, j, k, l, y);
          return q;
        };
        const double ez = error_norm(cs.hessian_lifts[ij][kl], z, {NormKind::L2}, no);
        zmax = std::max(zmax, ez);
        if (ij == 0 && kl == 0) z11 = ez;
      }
    }
    t.add_row(n, 1.0 / n, {cs.h, v11, z11, vmax, zmax});
  }
  return r;
}

StudyResult macro_study(const StudyConfig& c, const Problem& p, std::ostream* manifest) {
  const auto& a = need_cell(p, c.study);
  if (!known_rhs(c)) throw ConfigError("the macro study measures against the known u0 and needs rhs = known");
  const auto cs = stage("cell solve at " + at("n", c.cell_n), [&] {
    return solve_cell(a, make_cell_mesh(c, c.cell_n), cell_options(c, false, false));
  });
  const auto f = make_rhs(c, exact_a0(p));
  const auto exact = known_u0("paper41").as_jet_function();
  const auto mo = macro_options(c, manifest);
  StudyResult r;
  auto& t = r.table;
  t.parameter = "n";
  const bool h2 = c.formulation == "h2";
  t.columns = {"k", h2 ? "u0_h2_err" : "u0_h1_err"};
  t.eoc_columns = {t.columns[1]};
  NormOptions no;
  no.quad_degree = c.quad_degree;
  for (int n : c.macro_ladder) {
    const auto u = stage("macro solve at " + at("n", n), [&] {
      return h2 ? solve_homogenized_h2(cs.A0_h, f, square(n), mo) : solve_homogenized_h1(cs.A0_h, f, square(n), mo);
    });
    const double e = error_norm(u, exact, {h2 ? NormKind::H2 : NormKind::H1}, no);
    t.add_row(n, 1.0 / n, {1.0 / n, e});
  }
  return r;
}

int cell_n_for(const StudyConfig& c, int K) { return c.cell_ratio > 0 ? c.cell_ratio * K : c.cell_n; }

StudyResult nonuniform_study(const StudyConfig& c, const Problem& p, std::ostream* manifest) {
  const auto& a = need_macro(p, c.study);
  if (!known_rhs(c)) throw ConfigError("the nonuniform study measures against the known u0 and needs rhs = known");
  const auto o = oracle_diag_product(a);
  const auto f = make_rhs(c, exact_a0(p));
  const auto exact = known_u0("paper43").as_jet_function();
  const auto mo = macro_options(c, manifest);
  StudyResult r;
  auto& t = r.table;
  t.parameter = "K";
  t.columns = {"k", "h_cell", "a0_node_err", "u0_h2_err"};
  t.eoc_columns = {"a0_node_err", "u0_h2_err"};
  NormOptions no;
  no.quad_degree = c.quad_degree;
  for (int K : c.macro_ladder) {
    const int cn = cell_n_for(c, K);
    const auto res = stage("nonuniform pipeline at " + at("K", K) + ", " + at("cell n", cn), [&] {
      return solve_nonuniform(a, MacroGrid(unit_square_mesh(K)), cn, f, mo);
    });
    const auto& nodes = res.u0.space().mesh().vertices();
    double ea = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      ea = std::max(ea, (res.a0_nodes[i] - o.A0(nodes[i])).cwiseAbs().maxCoeff());
    const double eu = error_norm(res.u0, exact, {NormKind::H2}, no);
    t.add_row(K, 1.0 / K, {1.0 / K, 1.0 / cn, ea, eu});
  }
  return r;
}

// u0 and its corrector source for the error studies.
struct Approximation {
  JetFunction u0;
  CorrectorSource source;
  bool has_chi = false;
  double h_cell = 0.0;
  double k_macro = 0.0;
};

JetFunction fe_jet(const FeFunction& u) {
  return [u](const Vec2& x, int order) {
    thread_local int hint = -1;
    if (hint >= static_cast<int>(u.space().mesh().n_triangles())) hint = -1;
    return u.jet(x, order, &hint);
  };
}

Approximation approximation(const StudyConfig& c, const Problem& p, const ScalarFunction& f, int K, bool fe_u0,
                            std::ostream* manifest) {
  Approximation ap;
  const auto mo = macro_options(c, manifest);
  const int cn = cell_n_for(c, K);
  if (p.cell) {
    const bool fe_chi = c.correctors == "fe";
    std::shared_ptr<const CellSolution> cell;
    if (fe_u0 || fe_chi) {
      cell = std::make_shared<const CellSolution>(stage("cell solve at " + at("n", cn), [&] {
        return solve_cell(p.cell, make_cell_mesh(c, cn), cell_options(c, fe_chi, fe_chi));
      }));
      ap.h_cell = cell->h;
    }
    if (fe_u0) {
      if (c.formulation != "h2") throw ConfigError("corrector error studies need formulation = h2");
      const auto u = stage("macro solve at " + at("K", K), [&] { return solve_homogenized_h2(cell->A0_h, f, square(K), mo); });
      ap.u0 = fe_jet(u);
      ap.k_macro = 1.0 / K;
    } else {
      ap.u0 = known_u0("paper41").as_jet_function();
    }
    if (fe_chi) {
      ap.source = corrector_source(cell);
      ap.has_chi = true;
    } else {
      ap.source = corrector_source(oracle_y1_only(p.cell));
    }
    return ap;
  }
  if (c.correctors == "fe") throw ConfigError("fe correctors need an x-independent coefficient");
  ap.source = corrector_source(oracle_diag_product(p.macro));
  if (fe_u0) {
    const auto res = stage("nonuniform pipeline at " + at("K", K) + ", " + at("cell n", cn), [&] {
      return solve_nonuniform(p.macro, MacroGrid(unit_square_mesh(K)), cn, f, mo);
    });
    ap.u0 = fe_jet(res.u0);
    ap.h_cell = 1.0 / cn;
    ap.k_macro = 1.0 / K;
  } else {
    ap.u0 = known_u0("paper43").as_jet_function();
  }
  return ap;
}

FeFunction fine_reference(const StudyConfig& c, const Problem& p, double eps, const ScalarFunction& f,
                          std::ostream* manifest) {
  const int n = static_cast<int>(std::ceil(c.fine_ratio / eps - 1e-9));
  const auto mo = macro_options(c, manifest);
  return stage("fine-scale solve at " + at("eps", eps) + ", " + at("n", n), [&] {
    return p.cell ? solve_fine_scale(p.cell, eps, f, square(n), mo) : solve_fine_scale(p.macro, eps, f, square(n), mo);
  });
}

ReportOptions report_options(const StudyConfig& c, const Approximation& ap) {
  ReportOptions ro;
  ro.quad_degree = c.quad_degree;
  ro.subcells = c.subcells;
  ro.h_cell = ap.h_cell;
  ro.k_macro = ap.k_macro;
  return ro;
}

EocTable report_table(const std::string& parameter, const std::vector<ErrorReport>& reps, const std::vector<double>& params,
                      const std::vector<double>& sizes) {
  EocTable t;
  t.parameter = parameter;
  t.columns = {"h1_err", "e11", "e12", "e22", "squared_total"};
  t.eoc_columns = {"squared_total"};
  for (std::size_t i = 0; i < reps.size(); ++i)
    t.add_row(params[i], sizes[i], {reps[i].h1_error, reps[i].l2[0], reps[i].l2[1], reps[i].l2[2], reps[i].squared_total});
  return t;
}

StudyResult corrector_error_study(const StudyConfig& c, const Problem& p, std::ostream* manifest) {
  const bool fe_u0 = c.u0 == "fe";
  if (!fe_u0 && !known_rhs(c)) throw ConfigError("u0 = exact needs rhs = known");
  const auto f = make_rhs(c, exact_a0(p));
  const auto ap = approximation(c, p, f, c.macro_n, fe_u0, manifest);
  StudyResult r;
  std::vector<double> sizes;
  for (double eps : c.epsilon_ladder) {
    const auto ref = fine_reference(c, p, eps, f, manifest);
    const Reconstruction rec(ap.u0, ap.source, eps, ap.has_chi);
    r.reports.push_back(corrector_error_report(ref, rec, report_options(c, ap)));
    sizes.push_back(eps);
  }
  r.table = report_table("epsilon", r.reports, c.epsilon_ladder, sizes);
  return r;
}

StudyResult plateau_study(const StudyConfig& c, const Problem& p, std::ostream* manifest) {
  const auto f = make_rhs(c, exact_a0(p));
  const auto ref = fine_reference(c, p, c.epsilon, f, manifest);
  StudyResult r;
  std::vector<double> params, sizes;
  for (int K : c.macro_ladder) {
    const auto ap = approximation(c, p, f, K, true, manifest);
    const Reconstruction rec(ap.u0, ap.source, c.epsilon, ap.has_chi);
    r.reports.push_back(corrector_error_report(ref, rec, report_options(c, ap)));
    params.push_back(K);
    sizes.push_back(1.0 / K);
  }
  r.table = report_table("K", r.reports, params, sizes);

  // Plateau estimates: the finest value, and the constant of P + C k^4
  // through the last two points.
  const std::size_t n = r.reports.size();
  const double last = r.reports.back().squared_total;
  double fit = kNaN;
  if (n >= 2) {
    const double e0 = r.reports[n - 2].squared_total, e1 = last;
    const double q = std::pow(sizes[n - 2] / sizes[n - 1], 4.0);
    fit = (q * e1 - e0) / (q - 1.0);
  }
  auto& t = r.adjusted;
  t.parameter = "K";
  t.columns = {"squared_total", "minus_finest", "minus_fit", "plateau_fit"};
  t.eoc_columns = {"squared_total", "minus_finest", "minus_fit"};
  for (std::size_t i = 0; i < n; ++i) {
    const double e = r.reports[i].squared_total;
    t.add_row(params[i], sizes[i], {e, i + 1 < n ? e - last : kNaN, e - fit, fit});
  }
  return r;
}

void write_report_csv(const std::string& path, const StudyResult& r) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot write '" + path + "'");
  const auto e = r.table.eoc_of("squared_total");
  os << ErrorReport::csv_header(true) << "\n";
  for (std::size_t i = 0; i < r.reports.size(); ++i) os << r.reports[i].csv_row(&e[i]) << "\n";
}

}  // namespace

StudyResult run_study(const StudyConfig& config, const std::string& out_dir, std::ostream* manifest) {
  validate(config);
  const Problem p = resolve_problem(config);
  StudyResult r;
  const std::string& s = config.study;
  if (s == "invariant_measure" || s == "homogenized_matrix") r = cell_ladder_study(config, p);
  else if (s == "derivative_lift") r = derivative_lift_study(config, p);
  else if (s == "macro") r = macro_study(config, p, manifest);
  else if (s == "nonuniform") r = nonuniform_study(config, p, manifest);
  else if (s == "corrector_error") r = corrector_error_study(config, p, manifest);
  else r = plateau_study(config, p, manifest);

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string name = config.output.empty() ? s + ".csv" : config.output;
    const std::string path = (fs::path(out_dir) / name).string();
    if (!r.reports.empty()) {
      write_report_csv(path, r);
    } else {
      std::ofstream os(path);
      if (!os) throw InvalidArgument("cannot write '" + path + "'");
      r.table.write_csv(os);
    }
    r.files.push_back(path);
    if (!r.adjusted.rows.empty()) {
      const std::string adj = (fs::path(out_dir) / (fs::path(name).stem().string() + "_adjusted.csv")).string();
      std::ofstream os(adj);
      r.adjusted.write_csv(os);
      r.files.push_back(adj);
    }
  }
  return r;
}

}  // namespace homog
