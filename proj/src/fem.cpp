#include "poroflow/fem.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace poro {

namespace {

const int mandel_2d[3][2] = {{0, 0}, {1, 1}, {0, 1}};
const int mandel_3d[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};

const int* mandel_pair(int dim, int s) { return dim == 2 ? mandel_2d[s] : mandel_3d[s]; }

void require(const FeSpace& s, SpaceKind k, const char* what) {
  if (!s.mesh || s.kind != k) throw std::invalid_argument(std::string(what) + ": wrong space kind");
}

void same_mesh(const FeSpace& a, const FeSpace& b, const char* what) {
  if (a.mesh != b.mesh) throw std::invalid_argument(std::string(what) + ": spaces on different meshes");
}

double lambda_product(int dim, double vol, int k, int l) {
  return vol * (k == l ? 2.0 : 1.0) / ((dim + 1) * (dim + 2));
}

SparseMatrix from_triplets(Index r, Index c, const std::vector<Triplet>& t) {
  SparseMatrix A(r, c);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

}  // namespace

std::vector<Index> FeSpace::free_dofs() const {
  std::vector<Index> out;
  out.reserve(dof_count - dirichlet_dofs.size());
  std::size_t j = 0;
  for (Index i = 0; i < dof_count; ++i) {
    if (j < dirichlet_dofs.size() && dirichlet_dofs[j] == i) {
      ++j;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

FeSpace make_space(const Mesh& mesh, SpaceKind kind, unsigned essential) {
  FeSpace s;
  s.kind = kind;
  s.mesh = &mesh;
  const int d = mesh.dim;
  switch (kind) {
    case SpaceKind::vectorP1: s.dof_count = d * mesh.n_vertices(); break;
    case SpaceKind::scalarP1: s.dof_count = mesh.n_vertices(); break;
    case SpaceKind::RT0: s.dof_count = mesh.n_facets(); break;
    case SpaceKind::P0: s.dof_count = mesh.n_cells(); break;
  }
  if (essential == 0 || kind == SpaceKind::P0) return s;
  if (kind == SpaceKind::RT0) {
    for (Index f : mesh.boundary)
      if (mesh.facets[f].tags & essential) s.dirichlet_dofs.push_back(f);
  } else {
    std::vector<char> mark(mesh.n_vertices(), 0);
    for (Index f : mesh.boundary)
      if (mesh.facets[f].tags & essential)
        for (int k = 0; k < d; ++k) mark[mesh.facets[f].vertices[k]] = 1;
    for (Index v = 0; v < mesh.n_vertices(); ++v) {
      if (!mark[v]) continue;
      if (kind == SpaceKind::scalarP1)
        s.dirichlet_dofs.push_back(v);
      else
        for (int k = 0; k < d; ++k) s.dirichlet_dofs.push_back(v * d + k);
    }
  }
  return s;
}

VectorXd trace_vector(int dim) {
  VectorXd m = VectorXd::Zero(strain_size(dim));
  m.head(dim).setOnes();
  return m;
}

MatrixXd isotropic_stiffness(int dim, double mu, double lambda) {
  const int ns = strain_size(dim);
  VectorXd m = trace_vector(dim);
  MatrixXd C = 2 * mu * MatrixXd::Identity(ns, ns) + lambda * m * m.transpose();
  return C;
}

Eigen::Matrix3d mandel_to_tensor(const VectorXd& v, int dim) {
  Eigen::Matrix3d t = Eigen::Matrix3d::Zero();
  for (int s = 0; s < strain_size(dim); ++s) {
    const int* p = mandel_pair(dim, s);
    if (p[0] == p[1])
      t(p[0], p[0]) = v[s];
    else
      t(p[0], p[1]) = t(p[1], p[0]) = v[s] / std::sqrt(2.0);
  }
  return t;
}

VectorXd tensor_to_mandel(const Eigen::Matrix3d& t, int dim) {
  VectorXd v(strain_size(dim));
  for (int s = 0; s < strain_size(dim); ++s) {
    const int* p = mandel_pair(dim, s);
    v[s] = p[0] == p[1] ? t(p[0], p[0]) : std::sqrt(2.0) * 0.5 * (t(p[0], p[1]) + t(p[1], p[0]));
  }
  return v;
}

CellGeometry cell_geometry(const Mesh& mesh, Index c) {
  const int d = mesh.dim;
  CellGeometry g;
  for (int i = 0; i <= d; ++i) g.x.col(i) = mesh.vertex(mesh.cells(i, c));
  Eigen::MatrixXd J(d, d);
  for (int k = 0; k < d; ++k) J.col(k) = (g.x.col(k + 1) - g.x.col(0)).head(d);
  const double det = J.determinant();
  g.volume = std::abs(det) / (d == 2 ? 2.0 : 6.0);
  if (!(g.volume > 0)) throw std::invalid_argument("degenerate cell " + std::to_string(c));
  Eigen::MatrixXd Jinv = J.inverse();
  for (int k = 0; k < d; ++k) {
    g.grad.col(k + 1).head(d) = Jinv.row(k).transpose();
    g.grad.col(0).head(d) -= Jinv.row(k).transpose();
  }
  return g;
}

MatrixXd local_strain(const CellGeometry& g, int d) {
  const int ns = strain_size(d);
  MatrixXd B = MatrixXd::Zero(ns, d * (d + 1));
  const double r2 = std::sqrt(2.0);
  for (int a = 0; a <= d; ++a)
    for (int k = 0; k < d; ++k)
      for (int s = 0; s < ns; ++s) {
        const int* p = mandel_pair(d, s);
        if (p[0] == p[1])
          B(s, a * d + k) = p[0] == k ? g.grad(k, a) : 0.0;
        else
          B(s, a * d + k) = r2 * 0.5 * ((p[0] == k ? g.grad(p[1], a) : 0.0) + (p[1] == k ? g.grad(p[0], a) : 0.0));
      }
  return B;
}

SparseMatrix assemble_strain_operator(const FeSpace& u) {
  require(u, SpaceKind::vectorP1, "assemble_strain_operator");
  const Mesh& m = *u.mesh;
  const int d = m.dim, ns = strain_size(d), nl = d * (d + 1);
  std::vector<Triplet> t;
  t.reserve(m.n_cells() * ns * nl);
  for (Index c = 0; c < m.n_cells(); ++c) {
    MatrixXd B = local_strain(cell_geometry(m, c), d);
    for (int i = 0; i < nl; ++i)
      for (int s = 0; s < ns; ++s)
        if (B(s, i) != 0.0) t.emplace_back(c * ns + s, m.cells(i / d, c) * d + i % d, B(s, i));
  }
  return from_triplets(m.n_cells() * ns, u.dof_count, t);
}

SparseMatrix assemble_elasticity(const FeSpace& u, double mu, double lambda) {
  require(u, SpaceKind::vectorP1, "assemble_elasticity");
  if (!(mu > 0) || lambda < 0) throw std::invalid_argument("assemble_elasticity: need mu > 0, lambda >= 0");
  const Mesh& m = *u.mesh;
  const int d = m.dim, nl = d * (d + 1);
  MatrixXd C = isotropic_stiffness(d, mu, lambda);
  std::vector<Triplet> t;
  t.reserve(m.n_cells() * nl * nl);
  for (Index c = 0; c < m.n_cells(); ++c) {
    CellGeometry g = cell_geometry(m, c);
    MatrixXd B = local_strain(g, d);
    MatrixXd K = g.volume * B.transpose() * C * B;
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j)
        t.emplace_back(m.cells(i / d, c) * d + i % d, m.cells(j / d, c) * d + j % d, K(i, j));
  }
  return from_triplets(u.dof_count, u.dof_count, t);
}

SparseMatrix assemble_div_coupling(const FeSpace& p, const FeSpace& u) {
  require(p, SpaceKind::P0, "assemble_div_coupling");
  require(u, SpaceKind::vectorP1, "assemble_div_coupling");
  same_mesh(p, u, "assemble_div_coupling");
  const Mesh& m = *u.mesh;
  const int d = m.dim;
  std::vector<Triplet> t;
  for (Index c = 0; c < m.n_cells(); ++c) {
    CellGeometry g = cell_geometry(m, c);
    for (int a = 0; a <= d; ++a)
      for (int k = 0; k < d; ++k) t.emplace_back(c, m.cells(a, c) * d + k, g.volume * g.grad(k, a));
  }
  return from_triplets(p.dof_count, u.dof_count, t);
}

SparseMatrix assemble_rt0_mass(const FeSpace& q, const VectorXd& kappa) {
  require(q, SpaceKind::RT0, "assemble_rt0_mass");
  const Mesh& m = *q.mesh;
  if (kappa.size() != m.n_cells()) throw DimensionError("assemble_rt0_mass: kappa size");
  const int d = m.dim;
  std::vector<Triplet> t;
  t.reserve(m.n_cells() * (d + 1) * (d + 1));
  for (Index c = 0; c < m.n_cells(); ++c) {
    if (!(kappa[c] > 0) || !std::isfinite(kappa[c])) throw std::invalid_argument("assemble_rt0_mass: singular kappa");
    CellGeometry g = cell_geometry(m, c);
    const double vol = g.volume;
    const double scale = 1.0 / (kappa[c] * d * d * vol * vol);
    for (int i = 0; i <= d; ++i)
      for (int j = 0; j <= d; ++j) {
        double s = 0;
        for (int k = 0; k <= d; ++k)
          for (int l = 0; l <= d; ++l)
            s += (g.x.col(k) - g.x.col(i)).dot(g.x.col(l) - g.x.col(j)) * lambda_product(d, vol, k, l);
        const double sign = m.cell_signs(i, c) * m.cell_signs(j, c);
        t.emplace_back(m.cell_facets(i, c), m.cell_facets(j, c), sign * scale * s);
      }
  }
  return from_triplets(q.dof_count, q.dof_count, t);
}

SparseMatrix assemble_rt0_mass(const FeSpace& q, double kappa) {
  require(q, SpaceKind::RT0, "assemble_rt0_mass");
  return assemble_rt0_mass(q, VectorXd::Constant(q.mesh->n_cells(), kappa));
}

SparseMatrix assemble_mixed_div(const FeSpace& p, const FeSpace& q) {
  require(p, SpaceKind::P0, "assemble_mixed_div");
  require(q, SpaceKind::RT0, "assemble_mixed_div");
  same_mesh(p, q, "assemble_mixed_div");
  const Mesh& m = *q.mesh;
  std::vector<Triplet> t;
  for (Index c = 0; c < m.n_cells(); ++c)
    for (int i = 0; i <= m.dim; ++i) t.emplace_back(c, m.cell_facets(i, c), double(m.cell_signs(i, c)));
  return from_triplets(p.dof_count, q.dof_count, t);
}

SparseMatrix assemble_mass(const FeSpace& s) {
  const Mesh& m = *s.mesh;
  const int d = m.dim;
  std::vector<Triplet> t;
  if (s.kind == SpaceKind::P0) {
    for (Index c = 0; c < m.n_cells(); ++c) t.emplace_back(c, c, m.volumes[c]);
  } else if (s.kind == SpaceKind::scalarP1 || s.kind == SpaceKind::vectorP1) {
    const int nc = s.kind == SpaceKind::vectorP1 ? d : 1;
    for (Index c = 0; c < m.n_cells(); ++c)
      for (int a = 0; a <= d; ++a)
        for (int b = 0; b <= d; ++b)
          for (int k = 0; k < nc; ++k)
            t.emplace_back(m.cells(a, c) * nc + k, m.cells(b, c) * nc + k, lambda_product(d, m.volumes[c], a, b));
  } else {
    return assemble_rt0_mass(s, 1.0);
  }
  return from_triplets(s.dof_count, s.dof_count, t);
}

SparseMatrix assemble_laplacian(const FeSpace& s, double kappa) {
  require(s, SpaceKind::scalarP1, "assemble_laplacian");
  const Mesh& m = *s.mesh;
  const int d = m.dim;
  std::vector<Triplet> t;
  for (Index c = 0; c < m.n_cells(); ++c) {
    CellGeometry g = cell_geometry(m, c);
    for (int a = 0; a <= d; ++a)
      for (int b = 0; b <= d; ++b)
        t.emplace_back(m.cells(a, c), m.cells(b, c), kappa * g.volume * g.grad.col(a).dot(g.grad.col(b)));
  }
  return from_triplets(s.dof_count, s.dof_count, t);
}

VectorXd rt0_interpolate(const FeSpace& q, const std::function<Vec3(const Vec3&)>& f) {
  require(q, SpaceKind::RT0, "rt0_interpolate");
  const Mesh& m = *q.mesh;
  VectorXd out(m.n_facets());
  for (Index i = 0; i < m.n_facets(); ++i) {
    const Facet& fc = m.facets[i];
    out[i] = f(fc.midpoint).dot(fc.normal) * fc.area;
  }
  return out;
}

Vec3 rt0_value(const Mesh& m, const VectorXd& q, Index c, const Vec3& x) {
  const int d = m.dim;
  Vec3 v = Vec3::Zero();
  const double vol = m.volumes[c];
  for (int i = 0; i <= d; ++i)
    v += q[m.cell_facets(i, c)] * m.cell_signs(i, c) * (x - m.vertex(m.cells(i, c))) / (d * vol);
  return v;
}

VectorXd traction_load(const FeSpace& u, const Vec3& traction) {
  require(u, SpaceKind::vectorP1, "traction_load");
  const Mesh& m = *u.mesh;
  const int d = m.dim;
  VectorXd F = VectorXd::Zero(u.dof_count);
  for (Index f : m.boundary) {
    const Facet& fc = m.facets[f];
    if (!fc.load || !fc.has(Field::traction)) continue;
    for (int a = 0; a < d; ++a)
      for (int k = 0; k < d; ++k) F[fc.vertices[a] * d + k] += traction[k] * fc.area / d;
  }
  return F;
}

VectorXd project_p0(const Mesh& m, const std::function<double(const Vec3&)>& f) {
  const int d = m.dim;
  VectorXd out(m.n_cells());
  for (Index c = 0; c < m.n_cells(); ++c) {
    double s = 0;
    if (d == 2) {
      for (int i = 0; i < 3; ++i)
        s += f(0.5 * (m.vertex(m.cells(i, c)) + m.vertex(m.cells((i + 1) % 3, c)))) / 3.0;
    } else {
      const double a = 0.5854101966249685, b = 0.1381966011250105;
      for (int i = 0; i < 4; ++i) {
        Vec3 x = Vec3::Zero();
        for (int j = 0; j < 4; ++j) x += (i == j ? a : b) * m.vertex(m.cells(j, c));
        s += 0.25 * f(x);
      }
    }
    out[c] = s;
  }
  return out;
}

VectorXd project_p0(const Mesh& m, const VectorXd& p0) {
  if (p0.size() != m.n_cells()) throw DimensionError("project_p0: size");
  return p0;
}

Constrained apply_dirichlet(const SparseMatrix& A, const VectorXd& b, const FeSpace& s, double t) {
  if (A.rows() != s.dof_count || A.cols() != s.dof_count || b.size() != s.dof_count)
    throw DimensionError("apply_dirichlet: system does not match space");
  std::vector<char> fixed(s.dof_count, 0);
  VectorXd g = VectorXd::Zero(s.dof_count);
  for (Index i : s.dirichlet_dofs) {
    if (i < 0 || i >= s.dof_count) throw std::out_of_range("apply_dirichlet: dof not in system");
    fixed[i] = 1;
    g[i] = s.value(i, t);
  }
  Constrained out;
  out.b = b - A * g;
  std::vector<Triplet> tr;
  tr.reserve(A.nonZeros());
  for (Index j = 0; j < A.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(A, j); it; ++it)
      if (!fixed[it.row()] && !fixed[it.col()]) tr.emplace_back(it.row(), it.col(), it.value());
  for (Index i : s.dirichlet_dofs) {
    tr.emplace_back(i, i, 1.0);
    out.b[i] = g[i];
  }
  out.A = from_triplets(s.dof_count, s.dof_count, tr);
  return out;
}

}  // namespace poro
