#include "homog/io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

namespace homog {

namespace {

const char* kPair[3] = {"11", "12", "22"};

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot write '" + path + "'");
  return os;
}

}  // namespace

void write_fe_function(std::ostream& os, const FeFunction& f) {
  if (!f.valid()) throw InvalidArgument("write_fe_function: empty function");
  os << "fe-fn v1\n";
  os << "space " << to_string(f.space().kind()) << " " << to_string(f.space().constraint()) << "\n";
  os << "mesh " << f.space().mesh().hash() << "\n";
  os << "ndofs " << f.coeffs().size() << "\n";
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < f.coeffs().size(); ++i) os << f.coeffs()[i] << "\n";
}

FeFunction read_fe_function(std::istream& is, std::shared_ptr<const TriMesh> mesh) {
  std::string header;
  std::getline(is, header);
  if (header.rfind("fe-fn v1", 0) != 0) throw ParseError("read_fe_function: missing 'fe-fn v1' header", 0);
  std::string key, kind, constraint;
  std::uint64_t hash = 0;
  long n = 0;
  if (!(is >> key >> kind >> constraint) || key != "space") throw ParseError("read_fe_function: bad space line", 0);
  if (!(is >> key >> hash) || key != "mesh") throw ParseError("read_fe_function: bad mesh line", 0);
  if (!(is >> key >> n) || key != "ndofs") throw ParseError("read_fe_function: bad ndofs line", 0);
  if (hash != mesh->hash()) throw MeshMismatch("read_fe_function: file belongs to a different mesh");
  const auto space = FeSpace::create(space_kind_from_string(kind), std::move(mesh), constraint_from_string(constraint));
  if (n != space->n_dofs())
    throw InvalidArgument("read_fe_function: " + std::to_string(n) + " coefficients for a space with " +
                          std::to_string(space->n_dofs()) + " dofs");
  Eigen::VectorXd c(n);
  for (long i = 0; i < n; ++i)
    if (!(is >> c[i])) throw ParseError("read_fe_function: truncated coefficients", static_cast<std::size_t>(i));
  return FeFunction(space, std::move(c));
}

void save_fe_function(const std::string& path, const FeFunction& f) {
  auto os = open_out(path);
  write_fe_function(os, f);
}

FeFunction load_fe_function(const std::string& path, std::shared_ptr<const TriMesh> mesh) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot read '" + path + "'");
  return read_fe_function(is, std::move(mesh));
}

void write_grid_csv(std::ostream& os, const ScalarFunction& f, int n, const std::string& name) {
  if (n < 1) throw InvalidArgument("write_grid_csv: n must be >= 1");
  os << "x1,x2," << name << "\n" << std::setprecision(12);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const Vec2 x(static_cast<double>(i) / n, static_cast<double>(j) / n);
      os << x.x() << "," << x.y() << "," << f(x) << "\n";
    }
}

std::string export_cell_solution(const std::string& dir, const CellSolution& cell) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> files{"mesh.tri", "m_h.fefn"};
  save_mesh((fs::path(dir) / "mesh.tri").string(), cell.space->mesh());
  save_fe_function((fs::path(dir) / "m_h.fefn").string(), cell.m_h);
  for (int ij = 0; ij < 3; ++ij) {
    if (cell.has_correctors()) {
      files.push_back(std::string("chi_") + kPair[ij] + ".fefn");
      save_fe_function((fs::path(dir) / files.back()).string(), cell.correctors[ij]);
    }
    if (cell.has_hessians())
      for (int kl = 0; kl < 3; ++kl) {
        files.push_back(std::string("z_") + kPair[ij] + "_" + kPair[kl] + ".fefn");
        save_fe_function((fs::path(dir) / files.back()).string(), cell.hessian_lifts[ij][kl]);
      }
  }
  const std::string path = (fs::path(dir) / "cell.txt").string();
  auto os = open_out(path);
  write_cell_solution(os, cell, files);
  return path;
}

}  // namespace homog
