#pragma once

#include "homog/cell_solver.hpp"
#include "homog/fe_space.hpp"

#include <iosfwd>
#include <string>

namespace homog {

/// Plain-text `fe-fn v1`: space kind, constraint, mesh hash, coefficients.
void write_fe_function(std::ostream& os, const FeFunction& f);
/// Rebuilds the function on `mesh`; throws MeshMismatch when the mesh hash
/// differs and InvalidArgument when the dof count does.
FeFunction read_fe_function(std::istream& is, std::shared_ptr<const TriMesh> mesh);
void save_fe_function(const std::string& path, const FeFunction& f);
FeFunction load_fe_function(const std::string& path, std::shared_ptr<const TriMesh> mesh);

/// Samples on the (n+1)^2 grid of [0,1]^2 with header `x1,x2,<name>`.
void write_grid_csv(std::ostream& os, const ScalarFunction& f, int n, const std::string& name = "value");

/// Writes mesh.tri, m_h.fefn, chi_<ij>.fefn, z_<ij>_<kl>.fefn and cell.txt
/// into `dir`; returns the path of cell.txt.
std::string export_cell_solution(const std::string& dir, const CellSolution& cell);

}  // namespace homog
