#include <doctest.h>

#include "poroflow/solvers.hpp"

#include <random>

using namespace poro;

namespace {

std::shared_ptr<const Discretization> footing(int n) { return make_discretization(tag_footing_boundary(unit_box_mesh(2, n))); }

MaterialSpec spec(Family f) {
  MaterialSpec m;
  m.family = f;
  if (f == Family::nonlinear) {
    const Lame l = m.poro.lame(2);
    m.law = p_laplacian_law(2, l.mu, l.lambda);
    m.b.M = m.poro.M;
  }
  return m;
}

StepData loaded(const Discretization& d, const MaterialSpec& m) {
  StepData s = StepData::zero(d, m, 0.1);
  s.t = 0.1;
  s.traction = 1e8;
  for (Index e = 0; e < d.nc(); ++e)
    for (Index k = 0; k < s.content_prev.cols(); ++k) s.content_prev(e, k) = 1e-4 * std::cos(2.0 * e + k);
  return s;
}

VectorXd random_like(const DiscreteEnergy& E, const VectorXd& ref, std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  VectorXd x(E.size());
  for (const BlockRange& b : E.blocks) {
    const double s = std::max(ref.segment(b.offset, b.size).cwiseAbs().maxCoeff(), 1e-12);
    for (Index i = 0; i < b.size; ++i) x[b.offset + i] = s * U(rng);
  }
  return x;
}

const Family all_families[] = {Family::poro, Family::visco, Family::thermo, Family::nonlinear};

}  // namespace

TEST_CASE("poro energy at the zero state") {
  auto d = footing(4);
  const MaterialSpec m = spec(Family::poro);
  StepData s = StepData::zero(*d, m, 0.1);
  CHECK(build_poro_energy(d, m.poro, s).eval(VectorXd::Zero(d->nu() + d->nflux(0))) == 0.0);
  const double c = 2e-4;
  s.content_prev.setConstant(c);
  const DiscreteEnergy E = build_poro_energy(d, m.poro, s);
  CHECK(E.eval(VectorXd::Zero(E.size())) == doctest::Approx(0.5 * m.poro.M * c * c).epsilon(1e-12));
  CHECK(E.is_quadratic);
  CHECK(E.blocks.size() == 2);
  CHECK(E.blocks[0].name == "u");
  CHECK(E.blocks[1].name == "q");
}

TEST_CASE("poro gradient reproduces the weak equations") {
  auto d = footing(4);
  const MaterialSpec m = spec(Family::poro);
  const StepData s = loaded(*d, m);
  const DiscreteEnergy E = build_poro_energy(d, m.poro, s);
  std::mt19937 rng(3);
  const VectorXd x = random_like(E, solve_monolithic(E, zero_solution(E)).state.x, rng);
  const VectorXd g = E.grad(x);
  const VectorXd p = E.pressure(x).col(0);

  // independent assembly on the free dofs
  const Lame l = m.poro.lame(2);
  SparseMatrix A = submatrix(assemble_elasticity(d->u_space, l.mu, l.lambda), d->u_free, d->u_free);
  std::vector<Index> cells(d->nc());
  for (Index e = 0; e < d->nc(); ++e) cells[e] = e;
  SparseMatrix B = submatrix(assemble_div_coupling(d->p_space, d->u_space), cells, d->u_free);
  SparseMatrix D = submatrix(assemble_mixed_div(d->p_space, d->q_space), cells, d->flux_free[0]);
  SparseMatrix Mq = submatrix(assemble_rt0_mass(d->q_space, m.poro.kappa), d->flux_free[0], d->flux_free[0]);
  const VectorXd F = gather(traction_load(d->u_space, Vec3(0, -s.traction, 0)), d->u_free);
  const VectorXd u = x.head(d->nu()), q = x.segment(d->nu(), d->nflux(0));

  const VectorXd ru = A * u - m.poro.alpha * B.transpose() * p - F;
  const VectorXd rq = s.dt * (Mq * q - D.transpose() * p);
  CHECK((g.head(d->nu()) - ru).norm() <= 1e-10 * ru.norm());
  CHECK((g.segment(d->nu(), d->nflux(0)) - rq).norm() <= 1e-10 * rq.norm());

  // the post-processed pressure is the constitutive one
  const VectorXd theta = s.content_prev.col(0) - s.dt * (D * q).cwiseQuotient(d->vol);
  const VectorXd p_exact = m.poro.M * (theta - m.poro.alpha * (B * u).cwiseQuotient(d->vol));
  CHECK((p - p_exact).norm() <= 1e-10 * p_exact.norm());
}

TEST_CASE("quadratic energies are exactly quadratic") {
  auto d = footing(4);
  std::mt19937 rng(8);
  for (Family f : {Family::poro, Family::visco, Family::thermo}) {
    const MaterialSpec m = spec(f);
    const DiscreteEnergy E = build_energy(d, m, loaded(*d, m));
    const VectorXd x = random_like(E, solve_monolithic(E, zero_solution(E)).state.x, rng);
    const VectorXd z = VectorXd::Zero(E.size());
    const double lhs = E.eval(x) - E.eval(z) - E.grad(z).dot(x), rhs = 0.5 * x.dot(E.H * x);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
    CHECK(asymmetry(E.H) <= 1e-12);
  }
}

TEST_CASE("gradient matches central differences for every family") {
  auto d = footing(4);
  std::mt19937 rng(21);
  for (Family f : all_families) {
    const MaterialSpec m = spec(f);
    const DiscreteEnergy E = build_energy(d, m, loaded(*d, m));
    const VectorXd ref = solve_monolithic(E, zero_solution(E)).state.x;
    for (int k = 0; k < 20; ++k) {
      const VectorXd x = random_like(E, ref, rng), h = random_like(E, ref, rng);
      const double delta = 1e-6;
      const double fd = E.difference(x + delta * h, x - delta * h) / (2 * delta);
      CHECK(fd == doctest::Approx(E.grad(x).dot(h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("energies are convex") {
  auto d = footing(3);
  std::mt19937 rng(2);
  for (Family f : all_families) {
    const MaterialSpec m = spec(f);
    const DiscreteEnergy E = build_energy(d, m, loaded(*d, m));
    const VectorXd ref = solve_monolithic(E, zero_solution(E)).state.x;
    for (int k = 0; k < 50; ++k) {
      const VectorXd x = random_like(E, ref, rng), y = random_like(E, ref, rng);
      const double scale = std::abs(E.eval(x)) + std::abs(E.eval(y));
      CHECK(E.eval(0.5 * (x + y)) <= 0.5 * E.eval(x) + 0.5 * E.eval(y) + 1e-10 * scale);
    }
  }
}

TEST_CASE("difference agrees with eval") {
  auto d = footing(3);
  const MaterialSpec m = spec(Family::nonlinear);
  const DiscreteEnergy E = build_energy(d, m, loaded(*d, m));
  std::mt19937 rng(4);
  const VectorXd ref = solve_monolithic(E, zero_solution(E)).state.x;
  const VectorXd a = random_like(E, ref, rng), b = random_like(E, ref, rng);
  CHECK(E.difference(a, b) == doctest::Approx(E.eval(a) - E.eval(b)).epsilon(1e-10));
}

TEST_CASE("monolithic minimizer is stationary") {
  auto d = footing(4);
  for (Family f : all_families) {
    const MaterialSpec m = spec(f);
    const DiscreteEnergy E = build_energy(d, m, loaded(*d, m));
    const VectorXd x = solve_monolithic(E, zero_solution(E)).state.x;
    const double g0 = E.grad(VectorXd::Zero(E.size())).norm();
    CHECK(E.grad(x).norm() <= 1e-9 * g0);
  }
}

TEST_CASE("visco energy") {
  auto d = footing(4);
  MaterialSpec m = spec(Family::visco);
  StepData s = StepData::zero(*d, m, 0.1);
  s.content_prev.setConstant(1e-4);
  const DiscreteEnergy Z = build_visco_energy(d, m.poro, m.visco, s);
  CHECK(Z.eval(VectorXd::Zero(Z.size())) == doctest::Approx(0.5 * m.poro.M * 1e-8));
  CHECK(Z.blocks[1].name == "eps_v");

  // at eps_v = 0 the visco energy is the poro energy, for any alpha_v
  s = loaded(*d, m);
  m.visco.alpha_v = m.poro.alpha;
  const DiscreteEnergy V = build_visco_energy(d, m.poro, m.visco, s);
  const DiscreteEnergy P = build_poro_energy(d, m.poro, s);
  std::mt19937 rng(6);
  const VectorXd xp = random_like(P, solve_monolithic(P, zero_solution(P)).state.x, rng);
  VectorXd xv = VectorXd::Zero(V.size());
  xv.head(d->nu()) = xp.head(d->nu());
  xv.tail(d->nflux(0)) = xp.tail(d->nflux(0));
  CHECK(V.eval(xv) == doctest::Approx(P.eval(xp)).epsilon(1e-12));
  const VectorXd gv = V.grad(xv), gp = P.grad(xp);
  CHECK((gv.head(d->nu()) - gp.head(d->nu())).norm() <= 1e-10 * gp.norm());
  CHECK((gv.tail(d->nflux(0)) - gp.tail(d->nflux(0))).norm() <= 1e-10 * gp.norm());

  // stiff visco branch: the viscous strain vanishes and the poro energy is recovered
  MaterialSpec stiff = spec(Family::visco);
  stiff.visco.E_v = 1e6 * stiff.poro.E;
  const DiscreteEnergy S = build_visco_energy(d, stiff.poro, stiff.visco, s);
  const VectorXd xs = solve_monolithic(S, zero_solution(S)).state.x;
  const VectorXd xq = solve_monolithic(P, zero_solution(P)).state.x;
  CHECK(S.eval(xs) == doctest::Approx(P.eval(xq)).epsilon(1e-4));
  CHECK(xs.segment(d->nu(), d->nc() * d->ns).cwiseAbs().maxCoeff() <=
        1e-4 * S.strains(xs).cwiseAbs().maxCoeff());
}

TEST_CASE("thermo energy") {
  auto d = footing(4);
  MaterialSpec m = spec(Family::thermo);
  StepData s = StepData::zero(*d, m, 0.1);
  s.content_prev.col(0).setConstant(1e-4);
  s.content_prev.col(1).setConstant(-3.0);
  const DiscreteEnergy Z = build_thermo_energy(d, m.poro, m.thermo, s);
  const Eigen::Vector2d c(1e-4, -3.0);
  CHECK(Z.eval(VectorXd::Zero(Z.size())) == doctest::Approx(0.5 * c.dot(m.thermo.MT(m.poro.M) * c)).epsilon(1e-12));
  CHECK(Z.blocks.back().name == "j");

  m.thermo.alpha_T = m.thermo.alpha_phi = 0;
  const DiscreteEnergy E = build_thermo_energy(d, m.poro, m.thermo, loaded(*d, m), 10.0);
  std::vector<Index> ju(d->nu()), jj(d->nflux(1)), jq(d->nflux(0));
  for (Index i = 0; i < d->nu(); ++i) ju[i] = i;
  for (Index i = 0; i < d->nflux(0); ++i) jq[i] = E.q_offset[0] + i;
  for (Index i = 0; i < d->nflux(1); ++i) jj[i] = E.q_offset[1] + i;
  CHECK(submatrix(E.H, ju, jj).norm() == 0.0);
  CHECK(submatrix(E.H, jq, jj).norm() == 0.0);
  CHECK(submatrix(E.H, ju, jq).norm() > 0.0);
}

TEST_CASE("nonlinear energy with linear laws equals the poro energy") {
  auto d = footing(4);
  MaterialSpec m = spec(Family::poro);
  const StepData s = loaded(*d, m);
  const Lame l = m.poro.lame(2);
  Compressibility b;
  b.M = m.poro.M;
  const DiscreteEnergy N = build_nonlinear_energy(d, linear_law(2, l.mu, l.lambda), b, m.poro, s);
  const DiscreteEnergy P = build_poro_energy(d, m.poro, s);
  CHECK_FALSE(N.is_quadratic);
  std::mt19937 rng(12);
  const VectorXd ref = solve_monolithic(P, zero_solution(P)).state.x;
  for (int k = 0; k < 10; ++k) {
    const VectorXd x = random_like(P, ref, rng);
    CHECK(N.eval(x) == doctest::Approx(P.eval(x)).epsilon(1e-10));
  }
  const VectorXd xn = solve_monolithic(N, zero_solution(N)).state.x;
  CHECK((xn - ref).norm() <= 1e-8 * ref.norm());
}

TEST_CASE("energy norm") {
  auto d = footing(4);
  const MaterialSpec m = spec(Family::poro);
  const DiscreteEnergy E = build_energy(d, m, loaded(*d, m));
  const VectorXd xs = solve_monolithic(E, zero_solution(E)).state.x;
  std::mt19937 rng(14);
  const VectorXd x = random_like(E, xs, rng);
  CHECK(energy_norm(E, VectorXd::Zero(E.size())) == 0.0);
  CHECK(energy_norm(E, 2 * x) == doctest::Approx(2 * energy_norm(E, x)));
  const double n = energy_norm(E, x - xs);
  CHECK(n * n == doctest::Approx(E.difference(x, xs)).epsilon(1e-10));
}

TEST_CASE("strong duality and the dual gap") {
  auto d = footing(4);
  std::mt19937 rng(15);
  for (Family f : {Family::poro, Family::visco, Family::thermo}) {
    const MaterialSpec m = spec(f);
    const DiscreteEnergy E = build_energy(d, m, loaded(*d, m));
    const Solution s = solve_monolithic(E, zero_solution(E)).state;
    const double primal = E.eval(s.x), dual = dual_energy(E, s.x, s.p);
    CHECK(std::abs(primal + dual) <= 1e-12 * std::abs(primal));
    CHECK(dual_gap(E, s.x, s.p, s.x, s.p) == 0.0);
    const VectorXd x = random_like(E, s.x, rng);
    const MatrixXd p = E.pressure(x);
    CHECK(dual_difference(E, x, p, s.x, s.p) ==
          doctest::Approx(dual_energy(E, x, p) - dual_energy(E, s.x, s.p)).epsilon(1e-8));
  }
}

TEST_CASE("full displacement and block norms") {
  auto d = footing(4);
  const MaterialSpec m = spec(Family::thermo);
  const DiscreteEnergy E = build_energy(d, m, loaded(*d, m));
  const Solution s = solve_monolithic(E, zero_solution(E)).state;
  const VectorXd u = full_displacement(E, s.x);
  CHECK(u.size() == 2 * d->mesh->n_vertices());
  for (Index v : boundary_vertices_with(*d->mesh, Field::displacement)) CHECK(u.segment(2 * v, 2).norm() == 0.0);
  const BlockNorms n = l2_norms(E, s.x, s.p);
  CHECK(n.names == std::vector<std::string>{"u", "q", "j", "p", "T"});
  for (double v : n.values) CHECK(v > 0);
}
