#include <doctest.h>

#include "poroflow/fem.hpp"

#include <random>

using namespace poro;

namespace {

Mesh reference_triangle() {
  Eigen::MatrixXd v(2, 3);
  v << 0, 1, 0, 0, 0, 1;
  IndexMatrix c(3, 1);
  c << 0, 1, 2;
  return simplex_mesh(2, v, c);
}

VectorXd nodal(const Mesh& m, const std::function<Vec3(const Vec3&)>& f) {
  VectorXd u(m.dim * m.n_vertices());
  for (Index v = 0; v < m.n_vertices(); ++v)
    for (int k = 0; k < m.dim; ++k) u[v * m.dim + k] = f(m.vertex(v))[k];
  return u;
}

Index vertex_at(const Mesh& m, const Vec3& x) {
  for (Index v = 0; v < m.n_vertices(); ++v)
    if ((m.vertex(v) - x).norm() < 1e-14) return v;
  return -1;
}

}  // namespace

TEST_CASE("spaces") {
  Mesh m = tag_footing_boundary(unit_box_mesh(2, 4));
  CHECK(make_space(m, SpaceKind::vectorP1).dof_count == 50);
  CHECK(make_space(m, SpaceKind::RT0).dof_count == m.n_facets());
  CHECK(make_space(m, SpaceKind::P0).dof_count == 32);
  CHECK(make_space(m, SpaceKind::scalarP1).dof_count == 25);
  FeSpace V = make_space(m, SpaceKind::vectorP1, static_cast<unsigned>(Field::displacement));
  CHECK(V.dirichlet_dofs.size() == 10);
  CHECK(V.free_dofs().size() == 40);
  FeSpace Q = make_space(m, SpaceKind::RT0, static_cast<unsigned>(Field::flux));
  CHECK(Q.dirichlet_dofs.size() == 6);
}

TEST_CASE("mandel conventions") {
  const VectorXd tr = trace_vector(2);
  CHECK(tr == (VectorXd(3) << 1, 1, 0).finished());
  Eigen::Matrix3d t;
  t << 1, 2, 0, 2, 3, 0, 0, 0, 0;
  const VectorXd v = tensor_to_mandel(t, 2);
  CHECK(v[2] == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK((mandel_to_tensor(v, 2) - t).norm() <= 1e-15);
  // Mandel vectors carry the Frobenius product
  CHECK(v.squaredNorm() == doctest::Approx((t.array() * t.array()).sum()));
  const MatrixXd C = isotropic_stiffness(2, 1.0, 2.0);
  CHECK(C * VectorXd::Unit(3, 0) == (VectorXd(3) << 4, 2, 0).finished());
  CHECK(C(2, 2) == 2.0);
  CHECK(isotropic_stiffness(3, 1, 1).rows() == 6);
}

TEST_CASE("strain operator") {
  Mesh m = unit_box_mesh(2, 3);
  SparseMatrix S = assemble_strain_operator(make_space(m, SpaceKind::vectorP1));
  const VectorXd e = S * nodal(m, [](const Vec3& x) { return Vec3(x.x(), 0.5 * x.x(), 0); });
  for (Index c = 0; c < m.n_cells(); ++c) {
    CHECK(e[3 * c] == doctest::Approx(1.0));
    CHECK(e[3 * c + 1] == doctest::Approx(0.0));
    CHECK(e[3 * c + 2] == doctest::Approx(0.25 * std::sqrt(2.0)));
  }
}

TEST_CASE("elasticity") {
  Mesh m = unit_box_mesh(2, 3);
  SparseMatrix A = assemble_elasticity(make_space(m, SpaceKind::vectorP1), 2.0, 3.0);
  CHECK(asymmetry(A) <= 1e-14);
  CHECK((A * nodal(m, [](const Vec3&) { return Vec3(1, 2, 0); })).norm() <= 1e-12 * A.norm());
  // infinitesimal rotation is a rigid mode as well
  CHECK((A * nodal(m, [](const Vec3& x) { return Vec3(-x.y(), x.x(), 0); })).norm() <= 1e-12 * A.norm());

  Mesh t = reference_triangle();
  FeSpace V = make_space(t, SpaceKind::vectorP1);
  const VectorXd ux = nodal(t, [](const Vec3& x) { return Vec3(x.x(), 0, 0); });
  const VectorXd uxy = nodal(t, [](const Vec3& x) { return Vec3(x.x(), x.y(), 0); });
  SparseMatrix A0 = assemble_elasticity(V, 1, 0), A1 = assemble_elasticity(V, 1, 1);
  CHECK(ux.dot(A0 * ux) == doctest::Approx(1.0).epsilon(1e-14));
  // the lambda part is linear in lambda
  CHECK(uxy.dot(A1 * uxy) - uxy.dot(A0 * uxy) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(assemble_elasticity(V, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(assemble_elasticity(make_space(t, SpaceKind::P0), 1, 1), std::invalid_argument);
}

TEST_CASE("div coupling") {
  Mesh m = unit_box_mesh(2, 4);
  SparseMatrix B = assemble_div_coupling(make_space(m, SpaceKind::P0), make_space(m, SpaceKind::vectorP1));
  CHECK((B * nodal(m, [](const Vec3& x) { return Vec3(x.x(), x.y(), 0); }) - 2 * m.volumes).norm() <= 1e-14);
  CHECK((B * nodal(m, [](const Vec3&) { return Vec3(3, -1, 0); })).norm() <= 1e-14);
  Mesh t = reference_triangle();
  SparseMatrix Bt = assemble_div_coupling(make_space(t, SpaceKind::P0), make_space(t, SpaceKind::vectorP1));
  CHECK(Bt.coeff(0, 2 * vertex_at(t, Vec3(1, 0, 0))) == doctest::Approx(0.5));
  CHECK(Bt.coeff(0, 2 * vertex_at(t, Vec3(1, 0, 0)) + 1) == doctest::Approx(0.0));
  Mesh other = unit_box_mesh(2, 4);
  CHECK_THROWS_AS(assemble_div_coupling(make_space(other, SpaceKind::P0), make_space(m, SpaceKind::vectorP1)),
                  std::invalid_argument);
}

TEST_CASE("rt0 mass") {
  Mesh m = unit_box_mesh(2, 4);
  FeSpace Q = make_space(m, SpaceKind::RT0);
  SparseMatrix M1 = assemble_rt0_mass(Q, 1.0), M2 = assemble_rt0_mass(Q, 2.0);
  CHECK(SparseMatrix(M1 - 2 * M2).norm() <= 1e-14 * M1.norm());
  CHECK(asymmetry(M1) <= 1e-14);
  const VectorXd q = rt0_interpolate(Q, [](const Vec3&) { return Vec3(1, 0, 0); });
  CHECK(q.dot(M1 * q) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(assemble_rt0_mass(Q, 0.0), std::invalid_argument);

  // reference triangle: psi_i = s_i (x - P_i) has unit flux through the facet opposite P_i
  Mesh t = reference_triangle();
  SparseMatrix Mt = assemble_rt0_mass(make_space(t, SpaceKind::RT0), 1.0);
  const double area = 0.5;
  Eigen::Matrix2d xx = Eigen::Matrix2d::Zero();
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d P = t.vertices.col(t.cells(k, 0));
    xx += P * P.transpose();
    sum += P;
  }
  xx = area / 12 * (xx + sum * sum.transpose());  // integral of x x'
  const Eigen::Vector2d mean = area * sum / 3;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Eigen::Vector2d a = t.vertices.col(t.cells(i, 0)), b = t.vertices.col(t.cells(j, 0));
      const double exact = t.cell_signs(i, 0) * t.cell_signs(j, 0) * (xx.trace() - (a + b).dot(mean) + area * a.dot(b));
      CHECK(Mt.coeff(t.cell_facets(i, 0), t.cell_facets(j, 0)) == doctest::Approx(exact).epsilon(1e-13));
    }
}

TEST_CASE("mixed divergence") {
  for (int dim : {2, 3}) {
    Mesh m = unit_box_mesh(dim, 2);
    FeSpace Q = make_space(m, SpaceKind::RT0);
    SparseMatrix D = assemble_mixed_div(make_space(m, SpaceKind::P0), Q);
    std::vector<int> nnz(m.n_cells(), 0);
    for (Index k = 0; k < D.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(D, k); it; ++it) {
        ++nnz[it.row()];
        CHECK(std::abs(it.value()) == doctest::Approx(1.0));
      }
    for (int n : nnz) CHECK(n == dim + 1);
  }
  Mesh m = unit_box_mesh(2, 4);
  FeSpace Q = make_space(m, SpaceKind::RT0);
  SparseMatrix D = assemble_mixed_div(make_space(m, SpaceKind::P0), Q);
  const VectorXd loop = rt0_interpolate(Q, [](const Vec3& x) { return Vec3(-x.y(), x.x(), 0); });
  CHECK((D * loop).norm() <= 1e-14);
  const VectorXd q = rt0_interpolate(Q, [](const Vec3& x) { return Vec3(x.x() * x.x(), x.y(), 0); });
  double boundary = 0;
  for (Index f : m.boundary) boundary += q[f];
  CHECK((D * q).sum() == doctest::Approx(boundary).epsilon(1e-13));
  const VectorXd c = rt0_interpolate(Q, [](const Vec3& x) { return Vec3(3 * x.x(), 0, 0); });
  CHECK((D * c - 3 * m.volumes).norm() <= 1e-12);
}

TEST_CASE("rt0 evaluation reproduces constant fields") {
  Mesh m = unit_box_mesh(2, 2);
  const VectorXd q = rt0_interpolate(make_space(m, SpaceKind::RT0), [](const Vec3&) { return Vec3(0.3, -2, 0); });
  for (Index c = 0; c < m.n_cells(); ++c) CHECK((rt0_value(m, q, c, m.centroid(c)) - Vec3(0.3, -2, 0)).norm() <= 1e-13);
}

TEST_CASE("p0 projection") {
  Mesh m = unit_box_mesh(2, 3);
  CHECK((project_p0(m, [](const Vec3&) { return 4.0; }).array() == 4.0).all());
  const VectorXd p = project_p0(m, [](const Vec3& x) { return std::sin(x.x()) + x.y(); });
  CHECK(project_p0(m, p) == p);
  CHECK(project_p0(reference_triangle(), [](const Vec3& x) { return x.x(); })[0] == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(project_p0(m, VectorXd::Zero(3)), DimensionError);
}

TEST_CASE("scalar forms and loads") {
  Mesh m = tag_footing_boundary(unit_box_mesh(2, 4));
  FeSpace S = make_space(m, SpaceKind::scalarP1);
  const VectorXd one = VectorXd::Ones(S.dof_count);
  CHECK(one.dot(assemble_mass(S) * one) == doctest::Approx(1.0));
  CHECK((assemble_laplacian(S, 2.0) * one).norm() <= 1e-13);
  CHECK(VectorXd(assemble_mass(make_space(m, SpaceKind::P0)).diagonal()) == m.volumes);
  const VectorXd f = traction_load(make_space(m, SpaceKind::vectorP1), Vec3(0, -1, 0));
  double fy = 0, fx = 0;
  for (Index v = 0; v < m.n_vertices(); ++v) fx += f[2 * v], fy += f[2 * v + 1];
  CHECK(fy == doctest::Approx(-0.5));
  CHECK(fx == doctest::Approx(0.0));
}

TEST_CASE("dirichlet elimination") {
  Mesh m = tag_footing_boundary(unit_box_mesh(2, 4));
  FeSpace V = make_space(m, SpaceKind::vectorP1, static_cast<unsigned>(Field::displacement));
  SparseMatrix A = assemble_elasticity(V, 1.0, 1.0);
  Constrained z = apply_dirichlet(A, VectorXd::Zero(A.rows()), V, 0);
  CHECK(SpdSolver(z.A).solve(z.b).norm() == 0.0);

  const VectorXd b = VectorXd::LinSpaced(A.rows(), 1, -1);
  V.dirichlet_value = [](Index dof, double t) { return 1e-3 * t * (dof % 3); };
  Constrained c = apply_dirichlet(A, b, V, 2.0);
  CHECK(asymmetry(c.A) <= 1e-12);
  const VectorXd x = SpdSolver(c.A).solve(c.b);
  for (Index i : V.dirichlet_dofs) CHECK(x[i] == doctest::Approx(2e-3 * (i % 3)));
  const VectorXd r = A * x - b;
  for (Index i : V.free_dofs()) CHECK(std::abs(r[i]) <= 1e-10 * b.norm());

  FeSpace W = V;
  const std::vector<Index> fr = V.free_dofs();
  W.dirichlet_dofs.insert(W.dirichlet_dofs.end(), fr.begin(), fr.begin() + 5);
  std::sort(W.dirichlet_dofs.begin(), W.dirichlet_dofs.end());
  W.dirichlet_value = [x](Index dof, double) { return x[dof]; };
  Constrained c2 = apply_dirichlet(A, b, W, 2.0);
  CHECK((SpdSolver(c2.A).solve(c2.b) - x).norm() <= 1e-10 * x.norm());

  FeSpace bad = V;
  bad.dirichlet_dofs.push_back(V.dof_count + 3);
  CHECK_THROWS_AS(apply_dirichlet(A, b, bad, 0), std::out_of_range);
}

TEST_CASE("patch test") {
  Mesh m = unit_box_mesh(3, 2);
  SparseMatrix A = assemble_elasticity(make_space(m, SpaceKind::vectorP1), 1.7, 0.4);
  const VectorXd u = nodal(m, [](const Vec3& x) {
    return Vec3(0.1 + x.x() - 2 * x.z(), 0.5 * x.y() + x.x(), -x.z() + 0.3 * x.y());
  });
  const VectorXd r = A * u;
  for (Index v = 0; v < m.n_vertices(); ++v) {
    const Vec3 x = m.vertex(v);
    if ((x.array() > 1e-12).all() && (x.array() < 1 - 1e-12).all())
      CHECK(r.segment(3 * v, 3).norm() <= 1e-10 * A.norm());
  }
}

TEST_CASE("assembled forms are positive semidefinite") {
  Mesh m = unit_box_mesh(2, 3);
  std::vector<SparseMatrix> forms{assemble_elasticity(make_space(m, SpaceKind::vectorP1), 1, 2),
                                  assemble_rt0_mass(make_space(m, SpaceKind::RT0), 3),
                                  assemble_mass(make_space(m, SpaceKind::scalarP1)),
                                  assemble_laplacian(make_space(m, SpaceKind::scalarP1), 1)};
  std::mt19937 rng(1);
  std::normal_distribution<double> N;
  for (const SparseMatrix& A : forms)
    for (int k = 0; k < 100; ++k) {
      VectorXd x(A.rows());
      for (Index i = 0; i < x.size(); ++i) x[i] = N(rng);
      CHECK(x.dot(A * x) >= -1e-14 * A.norm() * x.squaredNorm());
    }
}
