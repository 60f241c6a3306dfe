#include <doctest.h>

#include "poroflow/analysis.hpp"

#include <random>

using namespace poro;

namespace {

MaterialSpec spec(Family f) {
  MaterialSpec m;
  m.family = f;
  return m;
}

IterationReport report_with_gaps(double g0, std::initializer_list<double> gaps) {
  IterationReport r;
  r.initial_gap = g0;
  for (double g : gaps) {
    IterationRecord rec;
    rec.gap = g;
    r.records.push_back(rec);
  }
  return r;
}

RateCertificate with_rate(double r) {
  RateCertificate c;
  c.rate = r;
  return c;
}

}  // namespace

TEST_CASE("fixed stress and undrained rates") {
  const MaterialSpec m = spec(Family::poro);
  // K_dr = E / (3 (1 - 2 nu)) in 3D
  const double K = 1e10 / (3 * 0.6), a2 = 1 / K;
  const double expected = a2 / (1e-11 + a2);
  CHECK(expected == doctest::Approx(0.947368).epsilon(1e-6));
  const RateCertificate fs = theoretical_rate(SchemeKind::fixed_stress, m, 3, 0.1);
  CHECK(fs.rate == doctest::Approx(expected).epsilon(1e-12));
  CHECK(fs.gap_factor() == doctest::Approx(expected * expected).epsilon(1e-12));
  CHECK(fs.a_posteriori_factor == doctest::Approx(expected / std::sqrt(1 - expected * expected)).epsilon(1e-12));
  CHECK(theoretical_rate(SchemeKind::undrained, m, 3, 0.1).rate == doctest::Approx(expected).epsilon(1e-12));

  // the Poincare term only helps
  RateOptions o;
  o.C_Omega = 1.0;
  const double with = theoretical_rate(SchemeKind::fixed_stress, m, 3, 0.1, o).rate;
  CHECK(with == doctest::Approx(a2 / (1e-11 + 0.1 * 1e-13 + a2)).epsilon(1e-12));
  CHECK(with <= fs.rate);

  MaterialSpec decoupled = m;
  decoupled.poro.alpha = 0;
  CHECK(theoretical_rate(SchemeKind::fixed_stress, decoupled, 2, 0.1).rate == 0.0);
  CHECK(theoretical_rate(SchemeKind::monolithic, m, 2, 0.1).rate == 0.0);
  CHECK_THROWS_AS(theoretical_rate(SchemeKind::fixed_stress, m, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(theoretical_rate(SchemeKind::visco_fixed_stress, m, 2, 0.1), std::invalid_argument);
  CHECK_FALSE(theoretical_rate(SchemeKind::alternating, m, 2, 0.1).available);
}

TEST_CASE("visco rate") {
  const MaterialSpec m = spec(Family::visco);
  const double dt = 0.1;
  const Lame l = m.poro.lame(2), lv = lame_from_E_nu(m.visco.E_v, m.visco.nu_v, 2);
  const double Kvp = 2 * m.visco.mu_v_prime / 2 + m.visco.lambda_v_prime;
  const double A2 = m.visco.alpha_v * m.visco.alpha_v / (lv.K_dr + Kvp / dt) + m.poro.alpha * m.poro.alpha / l.K_dr;
  const RateCertificate c = theoretical_rate(SchemeKind::visco_fixed_stress, m, 2, dt);
  CHECK(c.rate == doctest::Approx(A2 / (1 / m.poro.M + A2)).epsilon(1e-12));
  bool found = false;
  for (const auto& [name, v] : c.ingredients)
    if (name == "A_K^2") found = v == doctest::Approx(A2);
  CHECK(found);
}

TEST_CASE("thermo rates") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 50; ++k) {
    MaterialSpec m = spec(Family::thermo);
    m.poro.M = std::pow(10.0, 9 + 3 * U(rng));
    m.thermo.alpha_T = 1e-5 * (1 + 10 * U(rng));
    m.thermo.alpha_phi = 1e-6 * U(rng);
    m.thermo.C_d = 1e6 * (1 + 5 * U(rng));
    const double ua = theoretical_rate(SchemeKind::thermo_undrained_adiabatic, m, 2, 0.1).rate;
    const double ex = theoretical_rate(SchemeKind::thermo_extended_fixed_stress, m, 2, 0.1).rate;
    CHECK(ua < 1);
    CHECK(ex <= ua * (1 + 1e-14));
  }
  MaterialSpec m = spec(Family::thermo);
  m.poro.alpha = 0;
  m.thermo.alpha_T = 0;
  CHECK(theoretical_rate(SchemeKind::thermo_extended_fixed_stress, m, 2, 0.1).rate == 0.0);
}

TEST_CASE("toy rate and the abstract certificate") {
  CHECK(toy_rate(0.5).rate == doctest::Approx(0.25));
  CHECK(toy_rate(0.5).gap_factor() == doctest::Approx(0.0625));
  CHECK(toy_rate(0.0).rate == 0.0);
  CHECK_THROWS_AS(toy_rate(1.0), std::invalid_argument);
  CHECK(abstract_am_certificate({1, 1}, {2, 4}) == doctest::Approx(0.375));
  CHECK(abstract_am_certificate({2}, {2}) == 0.0);
  CHECK_THROWS_AS(abstract_am_certificate({3}, {2}), std::invalid_argument);
  CHECK_THROWS_AS(abstract_am_certificate({1, 1}, {2}), std::invalid_argument);
}

TEST_CASE("empirical rate") {
  CHECK(empirical_rate(report_with_gaps(1, {0.25, 0.0625})) == doctest::Approx(0.25));
  CHECK(empirical_rate(report_with_gaps(1, {1e-20})) == 0.0);
  CHECK(empirical_rate(report_with_gaps(1, {0.5, 0.0})) == 0.0);
  std::string why;
  CHECK(std::isnan(empirical_rate(report_with_gaps(1, {0.5, 0.7, 0.9, 1.1}), &why)));
  CHECK(why.find("monotone") != std::string::npos);
  IterationReport none;
  none.records.resize(3);
  CHECK(std::isnan(empirical_rate(none, &why)));
  CHECK(why.find("unavailable") != std::string::npos);
}

TEST_CASE("a posteriori bound") {
  CHECK(a_posteriori_bound(with_rate(0.5), 2.0, 2.0) == 0.0);
  CHECK(a_posteriori_bound(with_rate(0.5), 1.0, 0.0) == doctest::Approx(0.57735).epsilon(1e-5));
  CHECK(std::isinf(a_posteriori_bound(with_rate(1.0), 1.0, 0.0)));
  CHECK_THROWS_AS(a_posteriori_bound(with_rate(0.5), 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("certified bounds hold on random parameter sets") {
  auto d = make_discretization(tag_footing_boundary(unit_box_mesh(2, 4)));
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 6; ++k) {
    MaterialSpec m = spec(Family::poro);
    m.poro.E = std::pow(10.0, 9 + 2 * U(rng));
    m.poro.nu = 0.4 * U(rng);
    m.poro.alpha = 0.2 + 0.8 * U(rng);
    m.poro.M = std::pow(10.0, 9 + 3 * U(rng));
    StepData s = StepData::zero(*d, m, 0.1);
    s.traction = 1e8;
    s.t = 0.1;
    const DiscreteEnergy E = build_energy(d, m, s);
    const Solution star = solve_monolithic(E, zero_solution(E)).state;
    for (SchemeKind kind : {SchemeKind::undrained, SchemeKind::fixed_stress}) {
      SplitScheme sc;
      sc.kind = kind;
      sc.tol_rel = 1e-8;
      const SolveResult r = solve_step(E, sc, zero_solution(E), &star);
      const RateCertificate c = theoretical_rate(kind, m, 2, 0.1);
      CAPTURE(to_string(kind));
      CAPTURE(c.rate);
      const BoundCheck post = check_a_posteriori(c, r.report), prior = check_a_priori(c, r.report);
      CHECK(post.checked > 0);
      CHECK(post.max_ratio <= 1 + 1e-6);
      CHECK(prior.max_ratio <= 1 + 1e-6);
      const double emp = empirical_rate(r.report);
      CHECK(emp <= c.gap_factor() * (1 + 1e-6));
    }
  }
}
