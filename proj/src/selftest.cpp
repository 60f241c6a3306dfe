#include "poroflow/bench.hpp"
#include "poroflow/fem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>

namespace poro {

namespace {

struct Check {
  std::string name;
  std::function<std::string(bool&)> run;  // sets ok, returns a short detail line
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

Mesh reference_triangle() {
  Eigen::MatrixXd v(2, 3);
  v << 0, 1, 0, 0, 0, 1;
  IndexMatrix c(3, 1);
  c << 0, 1, 2;
  return simplex_mesh(2, v, c);
}

VectorXd nodal(const Mesh& m, const std::function<Vec3(const Vec3&)>& f) {
  VectorXd u(m.dim * m.n_vertices());
  for (Index v = 0; v < m.n_vertices(); ++v) {
    const Vec3 y = f(m.vertex(v));
    for (int k = 0; k < m.dim; ++k) u[v * m.dim + k] = y[k];
  }
  return u;
}

std::shared_ptr<const Discretization> footing(int n) { return make_discretization(tag_footing_boundary(unit_box_mesh(2, n))); }

MaterialSpec material(Family f) {
  MaterialSpec m;
  m.family = f;
  if (f == Family::nonlinear) {
    const Lame l = m.poro.lame(2);
    m.law = p_laplacian_law(2, l.mu, l.lambda);
    m.b.M = m.poro.M;
  }
  return m;
}

// loaded step energy with nonzero history
DiscreteEnergy loaded_energy(std::shared_ptr<const Discretization> d, const MaterialSpec& m) {
  StepData s = StepData::zero(*d, m, 0.1);
  s.t = 0.1;
  s.traction = 1e8;
  for (Index e = 0; e < d->nc(); ++e)
    for (Index k = 0; k < s.content_prev.cols(); ++k) s.content_prev(e, k) = 1e-4 * std::sin(3.0 * e + k);
  return build_energy(d, m, s);
}

// random state with per-block magnitudes taken from the monolithic minimizer
VectorXd random_state(const DiscreteEnergy& E, const VectorXd& ref, std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  VectorXd x(E.size());
  for (const BlockRange& b : E.blocks) {
    const double s = std::max(ref.segment(b.offset, b.size).cwiseAbs().maxCoeff(), 1e-12);
    for (Index i = 0; i < b.size; ++i) x[b.offset + i] = s * U(rng);
  }
  return x;
}

std::vector<Check> fem_checks() {
  std::vector<Check> c;
  c.push_back({"fem: rigid translation in the elasticity kernel", [](bool& ok) {
                 Mesh m = unit_box_mesh(2, 3);
                 SparseMatrix A = assemble_elasticity(make_space(m, SpaceKind::vectorP1), 2.0, 3.0);
                 const double r = (A * nodal(m, [](const Vec3&) { return Vec3(0.3, -1.2, 0); })).norm();
                 ok = r <= 1e-12 * A.norm();
                 return "|A u| = " + fmt(r);
               }});
  c.push_back({"fem: elasticity quadratic forms on the reference triangle", [](bool& ok) {
                 Mesh m = reference_triangle();
                 FeSpace V = make_space(m, SpaceKind::vectorP1);
                 const VectorXd ux = nodal(m, [](const Vec3& x) { return Vec3(x.x(), 0, 0); });
                 const VectorXd uxy = nodal(m, [](const Vec3& x) { return Vec3(x.x(), x.y(), 0); });
                 SparseMatrix A0 = assemble_elasticity(V, 1, 0), A1 = assemble_elasticity(V, 1, 1);
                 const double shear = ux.dot(A0 * ux), vol = uxy.dot(A1 * uxy) - uxy.dot(A0 * uxy);
                 ok = rel(shear, 1.0) <= 1e-12 && rel(vol, 2.0) <= 1e-12;
                 return "2mu|eps|^2 -> " + fmt(shear) + ", lambda (div u)^2 -> " + fmt(vol);
               }});
  c.push_back({"fem: div coupling oracles", [](bool& ok) {
                 Mesh m = unit_box_mesh(2, 4);
                 SparseMatrix B = assemble_div_coupling(make_space(m, SpaceKind::P0), make_space(m, SpaceKind::vectorP1));
                 const VectorXd r = B * nodal(m, [](const Vec3& x) { return Vec3(x.x(), x.y(), 0); });
                 const double e1 = (r - 2 * m.volumes).cwiseAbs().maxCoeff();
                 Mesh t = reference_triangle();
                 SparseMatrix Bt = assemble_div_coupling(make_space(t, SpaceKind::P0), make_space(t, SpaceKind::vectorP1));
                 Index v10 = 0;
                 for (Index v = 0; v < t.n_vertices(); ++v)
                   if (t.vertex(v).isApprox(Vec3(1, 0, 0))) v10 = v;
                 const double hat = Bt.coeff(0, v10 * 2);
                 ok = e1 <= 1e-14 && rel(hat, 0.5) <= 1e-14;
                 return "max |B u - 2|e|| = " + fmt(e1) + ", hat entry " + fmt(hat);
               }});
  c.push_back({"fem: RT0 mass scaling, constant flux, reference entries", [](bool& ok) {
                 Mesh m = unit_box_mesh(2, 4);
                 FeSpace Q = make_space(m, SpaceKind::RT0);
                 SparseMatrix M1 = assemble_rt0_mass(Q, 1.0), M2 = assemble_rt0_mass(Q, 2.0);
                 const double scale = (SparseMatrix(M1 - 2 * M2)).norm() / M1.norm();
                 const VectorXd q = rt0_interpolate(Q, [](const Vec3&) { return Vec3(1, 0, 0); });
                 const double unit = q.dot(M1 * q);
                 // edge-midpoint quadrature is exact for the quadratic integrands
                 Mesh t = reference_triangle();
                 SparseMatrix Mt = assemble_rt0_mass(make_space(t, SpaceKind::RT0), 1.0);
                 double err = 0;
                 const Vec3 mids[3] = {Vec3(0.5, 0, 0), Vec3(0.5, 0.5, 0), Vec3(0, 0.5, 0)};
                 for (Index i = 0; i < 3; ++i)
                   for (Index j = 0; j < 3; ++j) {
                     VectorXd ei = VectorXd::Unit(3, i), ej = VectorXd::Unit(3, j);
                     double s = 0;
                     for (const Vec3& x : mids) s += rt0_value(t, ei, 0, x).dot(rt0_value(t, ej, 0, x));
                     err = std::max(err, std::abs(s * t.volumes[0] / 3 - Mt.coeff(i, j)));
                   }
                 ok = scale <= 1e-14 && rel(unit, 1.0) <= 1e-12 && err <= 1e-14;
                 return "ratio residual " + fmt(scale) + ", |q|^2 = " + fmt(unit) + ", entry error " + fmt(err);
               }});
  c.push_back({"fem: mixed divergence rows, commuting property, divergence theorem", [](bool& ok) {
                 Mesh m = unit_box_mesh(2, 4);
                 FeSpace Q = make_space(m, SpaceKind::RT0);
                 SparseMatrix D = assemble_mixed_div(make_space(m, SpaceKind::P0), Q);
                 bool rows = true;
                 std::vector<int> nnz(m.n_cells(), 0);
                 for (Index k = 0; k < D.outerSize(); ++k)
                   for (SparseMatrix::InnerIterator it(D, k); it; ++it) {
                     ++nnz[it.row()];
                     rows = rows && std::abs(std::abs(it.value()) - 1) <= 1e-14;
                   }
                 for (int n : nnz) rows = rows && n == 3;
                 const VectorXd q = rt0_interpolate(Q, [](const Vec3& x) { return Vec3(x.x() + 1, x.y(), 0); });
                 const double comm = (D * q - 2 * m.volumes).cwiseAbs().maxCoeff();
                 double boundary = 0;
                 for (Index f : m.boundary) boundary += q[f];
                 const double thm = std::abs((D * q).sum() - boundary);
                 ok = rows && comm <= 1e-12 && thm <= 1e-12;
                 return "commuting error " + fmt(comm) + ", divergence theorem error " + fmt(thm);
               }});
  c.push_back({"fem: P0 projection", [](bool& ok) {
                 Mesh m = unit_box_mesh(2, 3);
                 const VectorXd c = project_p0(m, [](const Vec3&) { return 2.5; });
                 const VectorXd p = project_p0(m, [](const Vec3& x) { return x.x() * x.y(); });
                 const double idem = (project_p0(m, p) - p).norm();
                 const double third = project_p0(reference_triangle(), [](const Vec3& x) { return x.x(); })[0];
                 ok = (c.array() == 2.5).all() && idem == 0 && rel(third, 1.0 / 3) <= 1e-15;
                 return "x on the reference triangle -> " + fmt(third);
               }});
  c.push_back({"fem: Dirichlet elimination and linear patch test", [](bool& ok) {
                 Mesh m = tag_footing_boundary(unit_box_mesh(2, 4));
                 FeSpace V = make_space(m, SpaceKind::vectorP1, static_cast<unsigned>(Field::displacement));
                 SparseMatrix A = assemble_elasticity(V, 1.3, 0.7);
                 VectorXd b = VectorXd::LinSpaced(A.rows(), -1, 1);
                 Constrained c = apply_dirichlet(A, b, V, 0);
                 const double asym = asymmetry(c.A);
                 const VectorXd x = SpdSolver(c.A).solve(c.b);
                 // constrain additional dofs to the solved values
                 FeSpace W = V;
                 for (Index i = 0; i < 6; ++i) W.dirichlet_dofs.push_back(V.free_dofs()[i]);
                 std::sort(W.dirichlet_dofs.begin(), W.dirichlet_dofs.end());
                 W.dirichlet_value = [x](Index dof, double) { return x[dof]; };
                 Constrained c2 = apply_dirichlet(A, b, W, 0);
                 const double same = (SpdSolver(c2.A).solve(c2.b) - x).norm() / x.norm();
                 // P1 reproduces a linear field: interior residual vanishes
                 Mesh full = unit_box_mesh(2, 4);
                 SparseMatrix K = assemble_elasticity(make_space(full, SpaceKind::vectorP1), 2.0, 5.0);
                 const VectorXd u = nodal(full, [](const Vec3& y) { return Vec3(0.1 + 2 * y.x() - y.y(), 0.3 * y.x() + y.y(), 0); });
                 const VectorXd r = K * u;
                 double interior = 0;
                 for (Index v = 0; v < full.n_vertices(); ++v) {
                   const Vec3 y = full.vertex(v);
                   if (y.x() > 1e-12 && y.x() < 1 - 1e-12 && y.y() > 1e-12 && y.y() < 1 - 1e-12)
                     interior = std::max(interior, r.segment(2 * v, 2).cwiseAbs().maxCoeff());
                 }
                 ok = asym <= 1e-12 && same <= 1e-10 && interior <= 1e-10 * K.norm();
                 return "asymmetry " + fmt(asym) + ", constrained re-solve " + fmt(same) + ", patch residual " + fmt(interior);
               }});
  c.push_back({"fem: PSD spot check of assembled symmetric forms", [](bool& ok) {
                 Mesh m = unit_box_mesh(2, 3);
                 std::vector<SparseMatrix> forms{
                     assemble_elasticity(make_space(m, SpaceKind::vectorP1), 1, 1), assemble_rt0_mass(make_space(m, SpaceKind::RT0), 1),
                     assemble_mass(make_space(m, SpaceKind::P0)), assemble_mass(make_space(m, SpaceKind::scalarP1)),
                     assemble_laplacian(make_space(m, SpaceKind::scalarP1), 1)};
                 std::mt19937 rng(7);
                 std::normal_distribution<double> N;
                 double worst = 0;
                 for (const SparseMatrix& A : forms)
                   for (int t = 0; t < 100; ++t) {
                     VectorXd x(A.rows());
                     for (Index i = 0; i < x.size(); ++i) x[i] = N(rng);
                     worst = std::min(worst, x.dot(A * x) / (A.norm() * x.squaredNorm()));
                   }
                 ok = worst >= -1e-14;
                 return "min normalized quadratic form " + fmt(worst);
               }});
  return c;
}

std::vector<Check> gradient_checks() {
  std::vector<Check> c;
  for (Family f : {Family::poro, Family::visco, Family::thermo, Family::nonlinear})
    c.push_back({"energy: gradient vs central differences (" + to_string(f) + ")", [f](bool& ok) {
                   auto d = footing(4);
                   const MaterialSpec m = material(f);
                   DiscreteEnergy E = loaded_energy(d, m);
                   const VectorXd ref = solve_monolithic(E, zero_solution(E)).state.x;
                   std::mt19937 rng(11);
                   double worst = 0;
                   for (int t = 0; t < 20; ++t) {
                     const VectorXd x = random_state(E, ref, rng), h = random_state(E, ref, rng);
                     const double delta = 1e-6;
                     const double fd = E.difference(x + delta * h, x - delta * h) / (2 * delta);
                     worst = std::max(worst, rel(fd, E.grad(x).dot(h)));
                   }
                   ok = worst <= 1e-6;
                   return "max relative error " + fmt(worst);
                 }});
  c.push_back({"models: stress vs central differences of W (all laws)", [](bool& ok) {
                 std::vector<StrainEnergyLaw> laws{linear_law(2, 1.0, 2.0), p_laplacian_law(2, 1.0, 3.0)};
                 StrainEnergyLaw s = linear_law(2, 1.0, 1.0);
                 s.kind = WKind::nl_shear;
                 s.f0 = 2, s.f1 = 1, s.s_cap = 0.5;
                 laws.push_back(s);
                 StrainEnergyLaw v = linear_law(2, 1.0, 1.0);
                 v.kind = WKind::visco_elasto_plastic;
                 v.K_yield = 0.4;
                 laws.push_back(v);
                 std::mt19937 rng(3);
                 std::uniform_real_distribution<double> U(-0.5, 0.5);
                 double worst = 0;
                 for (const StrainEnergyLaw& w : laws)
                   for (int t = 0; t < 50; ++t) {
                     VectorXd e(3);
                     for (Index i = 0; i < 3; ++i) e[i] = U(rng);
                     const double h = 1e-6 * e.norm();
                     const VectorXd s = w.stress(e);
                     for (Index i = 0; i < 3; ++i) {
                       const VectorXd u = VectorXd::Unit(3, i) * h;
                       const double fd = (w.value(e + u) - w.value(e - u)) / (2 * h);
                       worst = std::max(worst, std::abs(fd - s[i]) / std::max(s.norm(), 1e-300));
                     }
                   }
                 ok = worst <= 1e-6;
                 return "max relative error " + fmt(worst);
               }});
  return c;
}

struct SchemeCase {
  Family family;
  SchemeKind kind;
};

const std::vector<SchemeCase>& am_cases() {
  static const std::vector<SchemeCase> v{
      {Family::poro, SchemeKind::undrained},
      {Family::poro, SchemeKind::fixed_stress},
      {Family::poro, SchemeKind::alternating},
      {Family::visco, SchemeKind::visco_undrained},
      {Family::visco, SchemeKind::visco_fixed_stress},
      {Family::thermo, SchemeKind::thermo_undrained_adiabatic},
      {Family::thermo, SchemeKind::thermo_extended_fixed_stress},
      {Family::thermo, SchemeKind::thermo_three_block},
      {Family::nonlinear, SchemeKind::nl_fixed_stress_newton},
  };
  return v;
}

std::vector<Check> scheme_checks() {
  std::vector<Check> c;
  // relaxation of the nonlinear split is an inexact line search and carries no monotonicity guarantee
  c.push_back({"solvers: energy monotonicity of every AM scheme (plain, and relaxed on quadratic energies)", [](bool& ok) {
                 auto d = footing(6);
                 ok = true;
                 std::string worst_name = "none";
                 double worst = 0;
                 for (const SchemeCase& sc : am_cases())
                   for (LineSearch ls : {LineSearch::off, LineSearch::quadratic}) {
                     if (sc.family == Family::nonlinear && ls == LineSearch::quadratic) continue;
                     DiscreteEnergy E = loaded_energy(d, material(sc.family));
                     SplitScheme s;
                     s.kind = sc.kind;
                     s.line_search = ls;
                     s.inner_tol = 1e-10;
                     const SolveResult r = solve_step(E, s, zero_solution(E));
                     const double scale = std::max(std::abs(r.report.initial_energy), std::abs(r.report.final_energy()));
                     const double inc = r.report.max_energy_increase() / scale;
                     ok = ok && r.report.outcome == Outcome::converged && inc <= 10 * roundoff_floor;
                     if (inc > worst) {
                       worst = inc;
                       worst_name = to_string(sc.kind) + "/" + to_string(ls);
                     }
                   }
                 return "largest relative increase " + fmt(worst) + " (" + worst_name + ")";
               }});
  c.push_back({"toy: alternating minimization with relaxation is monotone", [](bool& ok) {
                 DiscreteEnergy E = build_toy_energy(0.9);
                 E.b = Eigen::Vector2d(1, -0.3);
                 SplitScheme s;
                 s.kind = SchemeKind::alternating;
                 s.line_search = LineSearch::quadratic;
                 const SolveResult r = alternating_minimization(E, {{"x"}, {"y"}}, s, zero_solution(E));
                 ok = r.report.outcome == Outcome::converged && r.report.max_energy_increase() <= 1e-15;
                 return std::to_string(r.report.iterations()) + " sweeps";
               }});
  c.push_back({"solvers: alpha = 0 converges in a single iteration", [](bool& ok) {
                 auto d = footing(4);
                 ok = true;
                 double worst = 0;
                 for (const SchemeCase& sc : am_cases()) {
                   if (sc.kind == SchemeKind::alternating) continue;
                   MaterialSpec m = material(sc.family);
                   m.poro.alpha = 0;
                   m.visco.alpha_v = 0;
                   m.thermo.alpha_T = 0;
                   m.thermo.alpha_phi = 0;
                   DiscreteEnergy E = loaded_energy(d, m);
                   const Solution star = solve_monolithic(E, zero_solution(E)).state;
                   SplitScheme s;
                   s.kind = sc.kind;
                   s.max_outer = 1;
                   s.inner_tol = 1e-12;
                   const SolveResult r = solve_step(E, s, zero_solution(E));
                   const double err = (r.state.x - star.x).norm() / star.x.norm();
                   worst = std::max(worst, err);
                   ok = ok && err <= 1e-10;
                 }
                 return "max relative error after one iteration " + fmt(worst);
               }});
  c.push_back({"solvers: block minimization and stabilized equations give identical iterates", [](bool& ok) {
                 auto d = footing(6);
                 ok = true;
                 double worst = 0;
                 for (const SchemeCase& sc : am_cases()) {
                   if (sc.kind == SchemeKind::alternating || sc.family == Family::nonlinear) continue;
                   DiscreteEnergy E = loaded_energy(d, material(sc.family));
                   SplitScheme s;
                   s.kind = sc.kind;
                   s.max_outer = 8;
                   const SolveResult a = solve_step(E, s, zero_solution(E));
                   s.block_path = true;
                   const SolveResult b = solve_step(E, s, zero_solution(E));
                   const double diff = energy_norm(E, a.state.x - b.state.x) / energy_norm(E, a.state.x);
                   worst = std::max(worst, diff);
                   ok = ok && diff <= 1e-10;
                 }
                 return "max relative energy-norm difference " + fmt(worst);
               }});
  c.push_back({"toy: per-sweep gap factor rho^4", [](bool& ok) {
                 DiscreteEnergy E = build_toy_energy(0.5);
                 E.b = Eigen::Vector2d(1, 0.2);
                 Solution star{SpdSolver(E.H).solve(E.b), MatrixXd()};
                 SplitScheme s;
                 s.kind = SchemeKind::alternating;
                 const SolveResult r = alternating_minimization(E, {{"x"}, {"y"}}, s, zero_solution(E), &star);
                 const double emp = empirical_rate(r.report);
                 ok = std::abs(emp - 0.0625) <= 1e-6 && std::abs(toy_rate(0.5).gap_factor() - 0.0625) <= 1e-15;
                 return "empirical " + fmt(emp) + ", certificate " + fmt(toy_rate(0.5).gap_factor());
               }});
  c.push_back({"solvers: line search is exact on quadratic energies", [](bool& ok) {
                 auto d = footing(4);
                 double worst = 0;
                 for (Family f : {Family::poro, Family::visco, Family::thermo}) {
                   DiscreteEnergy E = loaded_energy(d, material(f));
                   const VectorXd ref = solve_monolithic(E, zero_solution(E)).state.x;
                   std::mt19937 rng(5);
                   for (int t = 0; t < 5; ++t) {
                     const VectorXd xp = random_state(E, ref, rng), xh = ref + 0.1 * random_state(E, ref, rng);
                     const Relaxed r = line_search_relax(E, xp, xh);
                     const VectorXd dx = xh - xp;
                     worst = std::max(worst, std::abs(E.grad(r.x).dot(dx)) / dx.dot(E.H * dx));
                   }
                 }
                 ok = worst <= 1e-8 && line_search_alpha(4, 1, 0) == 1.0 && line_search_alpha(1, 0, 1) == 0.0 &&
                      line_search_alpha(1, 1, 1) == 0.0;
                 return "max |dE/dalpha| / curvature " + fmt(worst);
               }});
  c.push_back({"solvers: fluid mass bookkeeping against the boundary flux", [](bool& ok) {
                 auto d = footing(6);
                 const Mesh& mesh = *d->mesh;
                 SplitScheme s;
                 s.kind = SchemeKind::fixed_stress;
                 TimeStepOptions o;
                 o.n_steps = 3;
                 const Trajectory tr = time_stepper(d, material(Family::poro), s, o);
                 double worst = 0, prev = 0;
                 for (const StepRecord& st : tr.steps) {
                   const double total = st.contents.col(0).dot(d->vol);
                   const VectorXd q = st.result.state.x.segment(d->nu(), d->nflux(0));
                   double outflow = 0;
                   for (Index i = 0; i < d->nflux(0); ++i)
                     if (mesh.facets[d->flux_free[0][i]].boundary()) outflow += q[i];
                   worst = std::max(worst, std::abs(total - prev + o.dt * outflow) / std::abs(total - prev));
                   prev = total;
                 }
                 ok = tr.ok && worst <= 1e-10;
                 return "max relative imbalance " + fmt(worst);
               }});
  return c;
}

}  // namespace

int selftest(std::ostream& os) {
  std::vector<Check> all = fem_checks();
  for (auto& v : {gradient_checks(), scheme_checks()}) all.insert(all.end(), v.begin(), v.end());
  int failed = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (const Check& c : all) {
    bool ok = false;
    std::string detail;
    try {
      detail = c.run(ok);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failed;
    os << (ok ? "PASS " : "FAIL ") << c.name << " | " << detail << '\n';
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  os << (failed ? "FAIL " : "PASS ") << all.size() - failed << "/" << all.size() << " property checks in " << fmt(s)
     << " s\n";
  return failed;
}

}  // namespace poro
