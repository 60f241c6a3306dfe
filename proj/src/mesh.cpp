#include "poroflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <stdexcept>

namespace poro {

std::string to_string(Field f) {
  switch (f) {
    case Field::displacement: return "displacement";
    case Field::traction: return "traction";
    case Field::flux: return "flux";
    case Field::pressure: return "pressure";
    case Field::entropy_flux: return "entropy_flux";
    case Field::temperature: return "temperature";
  }
  return "?";
}

Vec3 Mesh::vertex(Index v) const {
  Vec3 x = Vec3::Zero();
  x.head(dim) = vertices.col(v);
  return x;
}

Vec3 Mesh::centroid(Index c) const {
  Vec3 x = Vec3::Zero();
  for (int i = 0; i <= dim; ++i) x += vertex(cells(i, c));
  return x / (dim + 1);
}

namespace {

double signed_volume(const Mesh& m, const Index* v) {
  if (m.dim == 2) {
    Eigen::Vector2d a = m.vertices.col(v[1]) - m.vertices.col(v[0]);
    Eigen::Vector2d b = m.vertices.col(v[2]) - m.vertices.col(v[0]);
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
  }
  Eigen::Matrix3d J;
  for (int k = 0; k < 3; ++k) J.col(k) = m.vertices.col(v[k + 1]) - m.vertices.col(v[0]);
  return J.determinant() / 6.0;
}

void build_facets(Mesh& m) {
  const int nv = m.dim + 1;
  const Index nc = m.n_cells();
  m.cell_facets.resize(nv, nc);
  m.cell_signs.resize(nv, nc);
  m.facets.clear();
  std::map<std::array<Index, 3>, Index> lookup;
  for (Index c = 0; c < nc; ++c) {
    for (int i = 0; i < nv; ++i) {
      std::array<Index, 3> key{-1, -1, -1};
      int k = 0;
      for (int j = 0; j < nv; ++j)
        if (j != i) key[k++] = m.cells(j, c);
      std::sort(key.begin(), key.begin() + m.dim);
      auto it = lookup.find(key);
      if (it == lookup.end()) {
        Facet f;
        f.vertices = key;
        f.cells = {c, -1};
        Vec3 a = m.vertex(key[0]), b = m.vertex(key[1]);
        Vec3 n;
        if (m.dim == 2) {
          Vec3 t = b - a;
          n = Vec3(t.y(), -t.x(), 0.0);
          f.area = t.norm();
          f.midpoint = 0.5 * (a + b);
        } else {
          Vec3 d = m.vertex(key[2]);
          n = (b - a).cross(d - a);
          f.area = 0.5 * n.norm();
          f.midpoint = (a + b + d) / 3.0;
        }
        n.normalize();
        if (n.dot(a - m.vertex(m.cells(i, c))) < 0) n = -n;
        f.normal = n;
        const Index id = static_cast<Index>(m.facets.size());
        m.facets.push_back(f);
        lookup.emplace(key, id);
        m.cell_facets(i, c) = id;
        m.cell_signs(i, c) = 1;
      } else {
        Facet& f = m.facets[it->second];
        if (f.cells[1] >= 0) throw std::logic_error("facet shared by more than two cells");
        f.cells[1] = c;
        m.cell_facets(i, c) = it->second;
        m.cell_signs(i, c) = -1;
      }
    }
  }
  m.boundary.clear();
  for (Index f = 0; f < m.n_facets(); ++f)
    if (m.facets[f].boundary()) m.boundary.push_back(f);
}

}  // namespace

Mesh unit_box_mesh(int dim, Index n) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("unit_box_mesh: dim must be 2 or 3");
  if (n < 1) throw std::invalid_argument("unit_box_mesh: n_per_side must be at least 1");
  Mesh m;
  m.dim = dim;
  const Index np = n + 1;
  const Index nv = dim == 2 ? np * np : np * np * np;
  m.vertices.resize(dim, nv);
  auto vid = [&](Index i, Index j, Index k) { return i + np * (j + np * k); };
  for (Index k = 0; k < (dim == 3 ? np : 1); ++k)
    for (Index j = 0; j < np; ++j)
      for (Index i = 0; i < np; ++i) {
        const Index v = vid(i, j, k);
        m.vertices(0, v) = double(i) / n;
        m.vertices(1, v) = double(j) / n;
        if (dim == 3) m.vertices(2, v) = double(k) / n;
      }

  std::vector<std::array<int, 3>> perms;
  if (dim == 2) {
    perms = {{0, 1, 0}, {1, 0, 0}};
  } else {
    std::array<int, 3> p{0, 1, 2};
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
  }
  const Index per_box = static_cast<Index>(perms.size());
  const Index nboxes = dim == 2 ? n * n : n * n * n;
  m.cells.resize(dim + 1, nboxes * per_box);
  Index c = 0;
  for (Index k = 0; k < (dim == 3 ? n : 1); ++k)
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i)
        for (const auto& p : perms) {
          std::array<Index, 3> idx{i, j, k};
          m.cells(0, c) = vid(idx[0], idx[1], idx[2]);
          for (int s = 0; s < dim; ++s) {
            idx[p[s]] += 1;
            m.cells(s + 1, c) = vid(idx[0], idx[1], idx[2]);
          }
          if (signed_volume(m, m.cells.col(c).data()) < 0) std::swap(m.cells(0, c), m.cells(1, c));
          ++c;
        }
  m.volumes.resize(m.n_cells());
  for (Index e = 0; e < m.n_cells(); ++e) m.volumes[e] = signed_volume(m, m.cells.col(e).data());
  build_facets(m);
  return m;
}

Mesh simplex_mesh(int dim, const Eigen::MatrixXd& vertices, const IndexMatrix& cells) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("simplex_mesh: dim must be 2 or 3");
  if (vertices.rows() != dim || cells.rows() != dim + 1)
    throw std::invalid_argument("simplex_mesh: vertices must be dim x nv and cells (dim+1) x nc");
  Mesh m;
  m.dim = dim;
  m.vertices = vertices;
  m.cells = cells;
  m.volumes.resize(m.n_cells());
  for (Index e = 0; e < m.n_cells(); ++e) {
    for (int i = 0; i <= dim; ++i)
      if (m.cells(i, e) < 0 || m.cells(i, e) >= m.n_vertices()) throw std::out_of_range("simplex_mesh: vertex index");
    if (signed_volume(m, m.cells.col(e).data()) < 0) std::swap(m.cells(0, e), m.cells(1, e));
    m.volumes[e] = signed_volume(m, m.cells.col(e).data());
    if (!(m.volumes[e] > 0)) throw std::invalid_argument("simplex_mesh: degenerate cell");
  }
  build_facets(m);
  return m;
}

bool is_unit_box(const Mesh& m, double tol) {
  if (m.n_vertices() == 0) return false;
  Eigen::VectorXd lo = m.vertices.rowwise().minCoeff(), hi = m.vertices.rowwise().maxCoeff();
  if ((lo.array().abs() > tol).any() || ((hi.array() - 1.0).abs() > tol).any()) return false;
  return std::abs(m.volumes.sum() - 1.0) <= 1e-10;
}

bool tags_complementary(const Mesh& m) {
  const unsigned mech = unsigned(Field::displacement) | unsigned(Field::traction);
  const unsigned flow = unsigned(Field::flux) | unsigned(Field::pressure);
  const unsigned heat = unsigned(Field::entropy_flux) | unsigned(Field::temperature);
  for (Index f : m.boundary) {
    const unsigned t = m.facets[f].tags;
    for (unsigned pair : {mech, flow, heat}) {
      unsigned s = t & pair;
      if (s == 0 || s == pair) return false;
    }
  }
  return true;
}

Mesh tag_boundary(Mesh mesh, const std::vector<BoundaryTag>& tags) {
  for (Index f : mesh.boundary) {
    Facet& fc = mesh.facets[f];
    fc.tags = 0;
    for (const auto& t : tags)
      if (t.region(fc.midpoint)) fc.tags |= static_cast<unsigned>(t.field);
  }
  if (!tags_complementary(mesh))
    throw std::invalid_argument("tag_boundary: tags do not partition the boundary");
  return mesh;
}

Mesh tag_footing_boundary(Mesh mesh, const FootingOptions& opt) {
  if (!is_unit_box(mesh)) throw std::invalid_argument("tag_footing_boundary: mesh is not a unit box");
  const int d = mesh.dim;
  const double eps = 1e-12;
  auto bottom = [d, eps](const Vec3& x) { return x[d - 1] < eps; };
  auto patch = [d, eps, opt](const Vec3& x) {
    if (x[d - 1] < 1.0 - eps) return false;
    for (int k = 0; k < d - 1; ++k)
      if (x[k] < opt.patch_lo - eps || x[k] > opt.patch_hi + eps) return false;
    return true;
  };
  const bool np = opt.noflow_on_patch;
  std::vector<BoundaryTag> tags = {
      {Field::displacement, bottom},
      {Field::traction, [=](const Vec3& x) { return !bottom(x); }},
      {Field::flux, [=](const Vec3& x) { return bottom(x) || (np && patch(x)); }},
      {Field::pressure, [=](const Vec3& x) { return !bottom(x) && !(np && patch(x)); }},
      {Field::entropy_flux, bottom},
      {Field::temperature, [=](const Vec3& x) { return !bottom(x); }},
  };
  mesh = tag_boundary(std::move(mesh), tags);
  for (Index f : mesh.boundary) mesh.facets[f].load = patch(mesh.facets[f].midpoint);
  return mesh;
}

std::vector<Index> boundary_facets_with(const Mesh& m, Field f) {
  std::vector<Index> out;
  for (Index id : m.boundary)
    if (m.facets[id].has(f)) out.push_back(id);
  return out;
}

std::vector<Index> boundary_vertices_with(const Mesh& m, Field f) {
  std::vector<char> mark(m.n_vertices(), 0);
  for (Index id : m.boundary)
    if (m.facets[id].has(f))
      for (int k = 0; k < m.dim; ++k) mark[m.facets[id].vertices[k]] = 1;
  std::vector<Index> out;
  for (Index v = 0; v < m.n_vertices(); ++v)
    if (mark[v]) out.push_back(v);
  return out;
}

void write_vtk(std::ostream& os, const Mesh& m, const std::vector<VtkField>& point_data,
               const std::vector<VtkField>& cell_data) {
  os << "# vtk DataFile Version 3.0\nporoflow\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << std::setprecision(12);
  os << "POINTS " << m.n_vertices() << " double\n";
  for (Index v = 0; v < m.n_vertices(); ++v) {
    Vec3 x = m.vertex(v);
    os << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
  }
  const int nv = m.dim + 1;
  os << "CELLS " << m.n_cells() << ' ' << m.n_cells() * (nv + 1) << '\n';
  for (Index c = 0; c < m.n_cells(); ++c) {
    os << nv;
    for (int i = 0; i < nv; ++i) os << ' ' << m.cells(i, c);
    os << '\n';
  }
  os << "CELL_TYPES " << m.n_cells() << '\n';
  for (Index c = 0; c < m.n_cells(); ++c) os << (m.dim == 2 ? 5 : 10) << '\n';
  auto emit = [&os](const VtkField& f, Index n) {
    if (f.values.size() != n * f.components)
      throw DimensionError("write_vtk: field '" + f.name + "' has wrong size");
    if (f.components == 1) {
      os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (Index i = 0; i < n; ++i) os << f.values[i] << '\n';
    } else {
      os << "VECTORS " << f.name << " double\n";
      for (Index i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) os << (k < f.components ? f.values[i * f.components + k] : 0.0) << (k < 2 ? ' ' : '\n');
      }
    }
  };
  if (!point_data.empty()) {
    os << "POINT_DATA " << m.n_vertices() << '\n';
    for (const auto& f : point_data) emit(f, m.n_vertices());
  }
  if (!cell_data.empty()) {
    os << "CELL_DATA " << m.n_cells() << '\n';
    for (const auto& f : cell_data) emit(f, m.n_cells());
  }
}

void write_vtk(const std::string& path, const Mesh& m, const std::vector<VtkField>& point_data,
               const std::vector<VtkField>& cell_data) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  write_vtk(f, m, point_data, cell_data);
}

}  // namespace poro
