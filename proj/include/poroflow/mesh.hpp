#pragma once

#include "poroflow/linalg.hpp"

#include <Eigen/Geometry>

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace poro {

using Vec3 = Eigen::Vector3d;
using IndexMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>;

enum class Field : unsigned {
  displacement = 1u << 0,
  traction = 1u << 1,
  flux = 1u << 2,
  pressure = 1u << 3,
  entropy_flux = 1u << 4,
  temperature = 1u << 5,
};

std::string to_string(Field f);

struct BoundaryTag {
  Field field;
  std::function<bool(const Vec3&)> region;  // evaluated at the facet midpoint
};

struct Facet {
  std::array<Index, 3> vertices{-1, -1, -1};
  std::array<Index, 2> cells{-1, -1};  // cells[0] < cells[1]; cells[1] = -1 on the boundary
  Vec3 normal = Vec3::Zero();          // points from cells[0] to cells[1], outward on the boundary
  Vec3 midpoint = Vec3::Zero();
  double area = 0;
  unsigned tags = 0;
  bool load = false;  // loaded traction patch

  bool boundary() const { return cells[1] < 0; }
  bool has(Field f) const { return (tags & static_cast<unsigned>(f)) != 0; }
};

struct Mesh {
  int dim = 2;
  Eigen::MatrixXd vertices;  // dim x nv
  IndexMatrix cells;         // (dim+1) x nc, positively oriented
  IndexMatrix cell_facets;   // (dim+1) x nc, facet opposite local vertex i
  Eigen::MatrixXi cell_signs;  // +1 where the facet normal is outward for the cell
  VectorXd volumes;
  std::vector<Facet> facets;
  std::vector<Index> boundary;

  Index n_vertices() const { return static_cast<Index>(vertices.cols()); }
  Index n_cells() const { return static_cast<Index>(cells.cols()); }
  Index n_facets() const { return static_cast<Index>(facets.size()); }
  Vec3 vertex(Index v) const;
  Vec3 centroid(Index c) const;
};

Mesh unit_box_mesh(int dim, Index n_per_side);
// Arbitrary simplices; cells are reoriented to positive volume.
Mesh simplex_mesh(int dim, const Eigen::MatrixXd& vertices, const IndexMatrix& cells);

struct FootingOptions {
  double patch_lo = 0.25;
  double patch_hi = 0.75;
  bool noflow_on_patch = true;
};

// Applies tags to every boundary facet; throws if a complementary pair is not partitioned.
Mesh tag_boundary(Mesh mesh, const std::vector<BoundaryTag>& tags);
Mesh tag_footing_boundary(Mesh mesh, const FootingOptions& opt = {});

bool is_unit_box(const Mesh& mesh, double tol = 1e-12);
bool tags_complementary(const Mesh& mesh);
std::vector<Index> boundary_facets_with(const Mesh& mesh, Field f);
std::vector<Index> boundary_vertices_with(const Mesh& mesh, Field f);

struct VtkField {
  std::string name;
  int components = 1;
  VectorXd values;
};

// VTK legacy ASCII unstructured grid.
void write_vtk(std::ostream& os, const Mesh& mesh, const std::vector<VtkField>& point_data,
               const std::vector<VtkField>& cell_data);
void write_vtk(const std::string& path, const Mesh& mesh, const std::vector<VtkField>& point_data,
               const std::vector<VtkField>& cell_data);

}  // namespace poro
