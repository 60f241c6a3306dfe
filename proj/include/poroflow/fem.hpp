#pragma once

#include "poroflow/mesh.hpp"

#include <functional>

namespace poro {

enum class SpaceKind { vectorP1, RT0, P0, scalarP1 };

struct FeSpace {
  SpaceKind kind = SpaceKind::P0;
  const Mesh* mesh = nullptr;
  Index dof_count = 0;
  std::vector<Index> dirichlet_dofs;                    // sorted
  std::function<double(Index dof, double t)> dirichlet_value;  // empty: homogeneous

  std::vector<Index> free_dofs() const;
  double value(Index dof, double t) const { return dirichlet_value ? dirichlet_value(dof, t) : 0.0; }
};

// Essential dofs are taken from boundary facets carrying `essential`.
FeSpace make_space(const Mesh& mesh, SpaceKind kind, unsigned essential = 0);

// Mandel strain vectors: (xx, yy, sqrt2 xy) in 2D, (xx, yy, zz, sqrt2 yz, sqrt2 xz, sqrt2 xy) in 3D.
inline int strain_size(int dim) { return dim == 2 ? 3 : 6; }
VectorXd trace_vector(int dim);
MatrixXd isotropic_stiffness(int dim, double mu, double lambda);
Eigen::Matrix3d mandel_to_tensor(const VectorXd& v, int dim);
VectorXd tensor_to_mandel(const Eigen::Matrix3d& t, int dim);

struct CellGeometry {
  double volume = 0;
  Eigen::Matrix<double, 3, 4> grad = Eigen::Matrix<double, 3, 4>::Zero();  // barycentric gradients
  Eigen::Matrix<double, 3, 4> x = Eigen::Matrix<double, 3, 4>::Zero();     // vertex coordinates
};

CellGeometry cell_geometry(const Mesh& mesh, Index c);
// ns x d(d+1) local strain matrix, local dof a*d+k
MatrixXd local_strain(const CellGeometry& g, int dim);

// Cellwise strain operator: row c*ns + s of S applied to a vectorP1 field gives its Mandel strain on cell c.
SparseMatrix assemble_strain_operator(const FeSpace& u_space);

SparseMatrix assemble_elasticity(const FeSpace& u_space, double mu, double lambda);
// B(e, j) = integral over cell e of div phi_j
SparseMatrix assemble_div_coupling(const FeSpace& p_space, const FeSpace& u_space);
SparseMatrix assemble_rt0_mass(const FeSpace& q_space, double kappa);
SparseMatrix assemble_rt0_mass(const FeSpace& q_space, const VectorXd& kappa_per_cell);
// D(e, f) = integral over cell e of div psi_f, i.e. +-1
SparseMatrix assemble_mixed_div(const FeSpace& p_space, const FeSpace& q_space);
SparseMatrix assemble_mass(const FeSpace& space);  // P0, scalarP1 or vectorP1
SparseMatrix assemble_laplacian(const FeSpace& p1_space, double kappa);

VectorXd rt0_interpolate(const FeSpace& q_space, const std::function<Vec3(const Vec3&)>& q);
Vec3 rt0_value(const Mesh& mesh, const VectorXd& q, Index cell, const Vec3& x);
VectorXd traction_load(const FeSpace& u_space, const Vec3& traction);  // on facets flagged `load`
VectorXd project_p0(const Mesh& mesh, const std::function<double(const Vec3&)>& f);
VectorXd project_p0(const Mesh& mesh, const VectorXd& p0);

struct Constrained {
  SparseMatrix A;
  VectorXd b;
};
Constrained apply_dirichlet(const SparseMatrix& A, const VectorXd& b, const FeSpace& space, double t);

}  // namespace poro
