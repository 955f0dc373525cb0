// homog: command line front end for the cell, macro and study pipelines.

#include "homog/io.hpp"
#include "homog/macro_solver.hpp"
#include "homog/oracles.hpp"
#include "homog/parallel.hpp"
#include "homog/study.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

using namespace homog;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kSolver = 3;

struct Globals {
  std::string config;
  std::string out = ".";
  int threads = 1;
  unsigned seed = 0;
};

struct CoefArgs {
  std::string coef = "paper41";
  std::string a11, a12, a22;

  void add(CLI::App* app) {
    app->add_option("--coef", coef, "builtin coefficient (identity, constant_spd(d1,d2[,d12]), sep_diag(a), paper41, paper43)");
    app->add_option("--a11", a11, "expression for a11 in y1, y2 (and x1, x2)");
    app->add_option("--a12", a12, "expression for a12");
    app->add_option("--a22", a22, "expression for a22");
  }

  AnyCoefficient resolve() const {
    if (!a11.empty() || !a12.empty() || !a22.empty()) {
      if (a11.empty() || a12.empty() || a22.empty()) throw ConfigError("--a11, --a12 and --a22 go together");
      return parse_expression_field(a11, a12, a22, true);
    }
    return builtin(coef);
  }

  CellCoefficientPtr cell() const {
    const auto any = resolve();
    if (!std::holds_alternative<CellCoefficientPtr>(any))
      throw ConfigError("this subcommand needs an x-independent coefficient");
    return std::get<CellCoefficientPtr>(any);
  }
};

TriMesh make_cell_mesh(const std::string& kind, int n) {
  if (kind == "aligned") return cell_mesh(n, DiagonalPattern::CrissCross);
  if (kind == "diagonal") return cell_mesh(n, DiagonalPattern::Diagonal);
  if (kind == "non_aligned") return cell_mesh(n, DiagonalPattern::Diagonal, 0.5 / n);
  throw ConfigError("--mesh must be aligned, diagonal or non_aligned");
}

ScalarFunction make_rhs(const std::string& rhs, const std::function<Mat2(const Vec2&)>& a0) {
  if (rhs == "known") return rhs_for_known_u0(a0);
  if (rhs == "bump")
    return [](const Vec2& x) {
      const double d = 0.5 - (x.x() - 0.5) * (x.x() - 0.5) - (x.y() - 0.5) * (x.y() - 0.5);
      return d > 0.0 ? std::exp(-1.0 / d) : 0.0;
    };
  const auto e = std::make_shared<const Expression>(Expression::parse(rhs, true));
  return [e](const Vec2& x) { return e->eval(ExprVars{x.x(), x.y(), 0.0, 0.0}); };
}

std::function<Mat2(const Vec2&)> exact_a0(const AnyCoefficient& any) {
  if (std::holds_alternative<CellCoefficientPtr>(any)) {
    const Mat2 a0 = oracle_y1_only(std::get<CellCoefficientPtr>(any)).A0;
    return [a0](const Vec2&) { return a0; };
  }
  const auto o = std::make_shared<const DiagProductOracle>(oracle_diag_product(std::get<MacroCoefficientPtr>(any)));
  return [o](const Vec2& x) { return o->A0(x); };
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return (fs::path(g.out) / name).string();
}

std::ofstream open_manifest(const Globals& g) {
  std::ofstream os(out_path(g, "manifest.jsonl"), std::ios::app);
  if (!os) throw InvalidArgument("cannot write manifest in '" + g.out + "'");
  return os;
}

void print_matrix(const char* label, const Mat2& a) {
  std::cout << label << " " << std::setprecision(17) << a(0, 0) << " " << a(0, 1) << " " << a(1, 1) << "\n";
}

void write_samples(const Globals& g, const std::string& name, const ScalarFunction& f, int n, const std::string& col) {
  std::ofstream os(out_path(g, name));
  write_grid_csv(os, f, n, col);
}

int run(int argc, char** argv) {
  CLI::App app{"Finite element homogenization of nondivergence-form problems A(x/eps) : D2 u = f"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "study configuration file (key = value lines)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads for parallel loops")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "seed for sampled checks (overrides rng_seed)");

  // cell
  auto* cell = app.add_subcommand("cell", "solve the cell problems and export m_h, A0_h, correctors and lifts");
  CoefArgs cell_coef;
  cell_coef.add(cell);
  int cell_n = 64;
  std::string cell_mesh_kind = "aligned";
  bool no_lifts = false;
  cell->add_option("--n", cell_n, "cells per side")->capture_default_str();
  cell->add_option("--mesh", cell_mesh_kind, "aligned | diagonal | non_aligned")->capture_default_str();
  cell->add_flag("--no-lifts", no_lifts, "skip gradient and Hessian lifts");

  // homogenize
  auto* hom = app.add_subcommand("homogenize", "print A0_h (and the oracle value when one exists)");
  CoefArgs hom_coef;
  hom_coef.add(hom);
  int hom_n = 64;
  std::string hom_mesh = "aligned";
  hom->add_option("--n", hom_n, "cells per side")->capture_default_str();
  hom->add_option("--mesh", hom_mesh, "aligned | diagonal | non_aligned")->capture_default_str();

  // corrector
  auto* cor = app.add_subcommand("corrector", "sample chi_ij and its Hessian lifts on a grid (CSV)");
  CoefArgs cor_coef;
  cor_coef.add(cor);
  int cor_n = 64, cor_samples = 64;
  std::string cor_ij = "11";
  cor->add_option("--n", cor_n, "cells per side")->capture_default_str();
  cor->add_option("--ij", cor_ij, "11 | 12 | 22")->capture_default_str();
  cor->add_option("--samples", cor_samples, "grid intervals per side")->capture_default_str();

  // solve-eps
  auto* eps_cmd = app.add_subcommand("solve-eps", "fine-scale HCT solve of A(x, x/eps) : D2 u = f");
  CoefArgs eps_coef;
  eps_coef.add(eps_cmd);
  double eps = 0.125, fine_ratio = 8.0;
  int eps_n = 0, eps_samples = 64;
  std::string eps_rhs = "known";
  eps_cmd->add_option("--eps", eps, "period")->capture_default_str();
  eps_cmd->add_option("--n", eps_n, "cells per side (default ceil(fine_ratio / eps))");
  eps_cmd->add_option("--fine-ratio", fine_ratio, "required cells per period")->capture_default_str();
  eps_cmd->add_option("--rhs", eps_rhs, "known | bump | expression in x1, x2")->capture_default_str();
  eps_cmd->add_option("--samples", eps_samples, "grid intervals per side for u_eps.csv")->capture_default_str();

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "u0_h, the corrector reconstruction and optionally its error");
  CoefArgs rec_coef;
  rec_coef.add(rec);
  double rec_eps = 0.125, rec_ratio = 8.0;
  int rec_macro = 16, rec_cell = 64, rec_samples = 64;
  std::string rec_rhs = "known";
  bool rec_error = false;
  rec->add_option("--eps", rec_eps, "period")->capture_default_str();
  rec->add_option("--macro-n", rec_macro, "macro cells per side")->capture_default_str();
  rec->add_option("--cell-n", rec_cell, "cell mesh cells per side")->capture_default_str();
  rec->add_option("--rhs", rec_rhs, "known | bump | expression in x1, x2")->capture_default_str();
  rec->add_option("--samples", rec_samples, "grid intervals per side")->capture_default_str();
  rec->add_option("--fine-ratio", rec_ratio, "reference cells per period")->capture_default_str();
  rec->add_flag("--error", rec_error, "solve the fine-scale reference and write error.csv");

  // study
  auto* study = app.add_subcommand(
      "study",
      "run a convergence study from --config. CSV columns: the ladder parameter, the measured quantities and "
      "eoc_<column>; corrector_error and plateau write epsilon,h_cell,k_macro,h1_err,e11,e12,e22,squared_total,eoc");

  // oracle
  auto* orc = app.add_subcommand("oracle", "closed-form invariant measure and A0 for separable coefficients");
  CoefArgs orc_coef;
  orc_coef.add(orc);
  std::vector<double> orc_x{0.5, 0.5};
  orc->add_option("--x", orc_x, "macro point for x-dependent coefficients")->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  set_num_threads(g.threads);

  if (*cell) {
    CellSolveOptions co;
    co.hessians = !no_lifts;
    const auto cs = solve_cell(cell_coef.cell(), make_cell_mesh(cell_mesh_kind, cell_n), co);
    const std::string path = export_cell_solution(out_path(g, "cell"), cs);
    print_matrix("a0", cs.A0_h.entries);
    for (const auto& w : cs.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << path << "\n";
  } else if (*hom) {
    CellSolveOptions co;
    co.correctors = co.hessians = false;
    const auto a = hom_coef.cell();
    const auto cs = solve_cell(a, make_cell_mesh(hom_mesh, hom_n), co);
    print_matrix("a0_h", cs.A0_h.entries);
    std::cout << "h " << cs.h << "\nelliptic " << (cs.A0_h.elliptic() ? "yes" : "no") << "\n";
    try {
      const auto o = oracle_y1_only(a);
      print_matrix("a0_oracle", o.A0);
      std::cout << "max_abs_diff " << (cs.A0_h.entries - o.A0).cwiseAbs().maxCoeff() << "\n";
    } catch (const WrongOracle&) {
    }
    std::ofstream os(out_path(g, "m_h.csv"));
    write_grid_csv(os, [&cs](const Vec2& y) { return cs.m_h.value(y); }, hom_n, "m_h");
  } else if (*cor) {
    int i, j;
    if (cor_ij == "11") i = 0, j = 0;
    else if (cor_ij == "12") i = 0, j = 1;
    else if (cor_ij == "22") i = 1, j = 1;
    else throw ConfigError("--ij must be 11, 12 or 22");
    const auto cs = solve_cell(cor_coef.cell(), make_cell_mesh("aligned", cor_n));
    const auto& chi = cs.corrector(i, j);
    write_samples(g, "chi_" + cor_ij + ".csv", [&chi](const Vec2& y) { return chi.value(y); }, cor_samples, "chi");
    const char* kl[3] = {"11", "12", "22"};
    for (int k = 0; k < 3; ++k) {
      const auto& z = cs.hessian_lifts[sym_index(i, j)][k];
      write_samples(g, "z_" + cor_ij + "_" + kl[k] + ".csv", [&z](const Vec2& y) { return z.value(y); }, cor_samples,
                    "z");
    }
    print_matrix("a0", cs.A0_h.entries);
  } else if (*eps_cmd) {
    const auto any = eps_coef.resolve();
    const auto f = make_rhs(eps_rhs, eps_rhs == "known" ? exact_a0(any) : nullptr);
    const int n = eps_n > 0 ? eps_n : static_cast<int>(std::ceil(fine_ratio / eps - 1e-9));
    auto manifest = open_manifest(g);
    MacroOptions mo;
    mo.fine_ratio = fine_ratio;
    mo.manifest = &manifest;
    RunRecord rr;
    mo.record = &rr;
    const auto mesh = std::make_shared<const TriMesh>(unit_square_mesh(n));
    const auto u = std::holds_alternative<CellCoefficientPtr>(any)
                       ? solve_fine_scale(std::get<CellCoefficientPtr>(any), eps, f, mesh, mo)
                       : solve_fine_scale(std::get<MacroCoefficientPtr>(any), eps, f, mesh, mo);
    save_mesh(out_path(g, "fine.tri"), *mesh);
    save_fe_function(out_path(g, "u_eps.fefn"), u);
    write_samples(g, "u_eps.csv", [&u](const Vec2& x) { return u.value(x); }, eps_samples, "u_eps");
    std::cout << to_json_line(rr) << "\n";
  } else if (*rec) {
    const auto a = rec_coef.cell();
    const auto f = make_rhs(rec_rhs, rec_rhs == "known" ? exact_a0(AnyCoefficient(a)) : nullptr);
    auto manifest = open_manifest(g);
    MacroOptions mo;
    mo.manifest = &manifest;
    mo.fine_ratio = rec_ratio;
    const auto cell = std::make_shared<const CellSolution>(solve_cell(a, make_cell_mesh("aligned", rec_cell)));
    const auto u0 = solve_homogenized_h2(cell->A0_h, f, std::make_shared<const TriMesh>(unit_square_mesh(rec_macro)), mo);
    save_mesh(out_path(g, "macro.tri"), u0.space().mesh());
    save_fe_function(out_path(g, "u0_h.fefn"), u0);
    const auto r = reconstruct(u0, cell, rec_eps);
    std::ofstream os(out_path(g, "reconstruction.csv"));
    os << "x1,x2,u0_h,first_order,u11,u12,u22\n" << std::setprecision(12);
    for (int jy = 0; jy <= rec_samples; ++jy)
      for (int ix = 0; ix <= rec_samples; ++ix) {
        const Vec2 x(static_cast<double>(ix) / rec_samples, static_cast<double>(jy) / rec_samples);
        const Mat2 H = r.hessian(x);
        os << x.x() << "," << x.y() << "," << u0.value(x) << "," << r.first_order(x) << "," << H(0, 0) << ","
           << H(0, 1) << "," << H(1, 1) << "\n";
      }
    if (rec_error) {
      const int n = static_cast<int>(std::ceil(rec_ratio / rec_eps - 1e-9));
      const auto ref = solve_fine_scale(a, rec_eps, f, std::make_shared<const TriMesh>(unit_square_mesh(n)), mo);
      ReportOptions ro;
      ro.h_cell = cell->h;
      ro.k_macro = 1.0 / rec_macro;
      const auto rep = corrector_error_report(ref, r, ro);
      std::ofstream es(out_path(g, "error.csv"));
      es << ErrorReport::csv_header() << "\n" << rep.csv_row() << "\n";
      std::cout << ErrorReport::csv_header() << "\n" << rep.csv_row() << "\n";
    }
  } else if (*study) {
    if (g.config.empty()) throw ConfigError("study needs --config");
    auto c = load_study_config(g.config);
    if (app.get_option("--seed")->count()) c.rng_seed = g.seed;
    auto manifest = open_manifest(g);
    const auto r = run_study(c, g.out, &manifest);
    std::cout << r.table.format();
    if (!r.adjusted.rows.empty()) std::cout << "\n" << r.adjusted.format();
    for (const auto& f : r.files) std::cout << "wrote " << f << "\n";
  } else if (*orc) {
    const auto any = orc_coef.resolve();
    std::cout << std::setprecision(17);
    if (std::holds_alternative<CellCoefficientPtr>(any)) {
      const auto o = oracle_y1_only(std::get<CellCoefficientPtr>(any));
      std::cout << "kind " << o.kind << "\nC " << o.C << "\n";
      print_matrix("a0", o.A0);
      const double mass = integrate_1d([&o](double t) { return o.m_exact(Vec2(t, 0.0)); }, 0.0, 1.0, {0.5});
      std::cout << "int_m " << mass << "\n";
    } else {
      const auto o = oracle_diag_product(std::get<MacroCoefficientPtr>(any));
      const Vec2 x(orc_x[0], orc_x[1]);
      std::cout << "kind diag_product\nx " << x.x() << " " << x.y() << "\n";
      print_matrix("a0", o.A0(x));
      const double mass = integrate_1d(
          [&](double s) {
            return integrate_1d([&](double t) { return o.m_exact(x, Vec2(s, t)); }, 0.0, 1.0, {0.5});
          },
          0.0, 1.0, {0.5});
      std::cout << "int_m " << mass << "\n";
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
